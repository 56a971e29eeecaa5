#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "pufm/vec3.hpp"

namespace pufm {

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
};

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c);

// Removes zero-area faces in place; returns how many were dropped.
std::size_t drop_degenerate_faces(TriangleMesh& mesh);

}  // namespace pufm
