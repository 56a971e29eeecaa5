#pragma once

#include <cstddef>
#include <string>

#include "pufm/geometry.hpp"
#include "pufm/mesh.hpp"
#include "pufm/rng.hpp"

namespace pufm {

enum class ShapeKind { kSphere, kTorus, kPlaneBump, kRing2d, kLetter2d, kMeshFile };

// Analytic surface (or mesh file) plus its parameters. The string form used in
// configs and manifests is kind:comma-separated-params, e.g. "torus:1.0,0.3".
struct ShapeSpec {
  ShapeKind kind = ShapeKind::kSphere;
  double radius = 1.0;                       // sphere
  double major = 1.0, minor = 0.3;           // torus
  double extent = 1.0;                       // plane-with-bump: square side
  double bump_height = 0.5, bump_width = 0.3;
  double r_inner = 0.6, r_outer = 1.0;       // 2d ring (annulus, z = 0)
  std::string mesh_path;                     // mesh-file
  std::size_t oversample = 8;                // oversampling factor before thinning
};

ShapeSpec parse_shape(const std::string& text);
std::string to_string(const ShapeSpec& spec);

// n points on the surface, approximately uniform: n * oversample raw uniform
// samples thinned back to n by farthest point sampling.
PointCloud sample_shape(const ShapeSpec& spec, std::size_t n, Rng& rng);

// Area-weighted uniform samples on a triangle mesh.
PointCloud sample_mesh(const TriangleMesh& mesh, std::size_t n, Rng& rng);

// Supervision pair cut from one dense surface sampling. Both clouds live in
// the dense patch's normalized frame; norm maps them back.
struct PatchPair {
  PointCloud sparse;
  PointCloud dense;
  NormParams norm;
  std::string source_id;
  std::size_t seed_index = 0;  // FPS seed into the source surface
};

// Patch seeds by FPS over the surface; dense patch = dense_size nearest
// neighbors of the seed; sparse = uniform random sparse_size-subset of dense.
std::vector<PatchPair> extract_patches(const PointCloud& dense_surface, std::size_t num_patches,
                                       std::size_t dense_size, std::size_t sparse_size, Rng& rng);

// I.i.d. Gaussian perturbation, standard deviation eta per coordinate.
PointCloud add_noise(const PointCloud& cloud, double eta, Rng& rng);

}  // namespace pufm
