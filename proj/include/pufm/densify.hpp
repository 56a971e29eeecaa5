#pragma once

#include <cstdint>

#include "pufm/geometry.hpp"

namespace pufm {

struct DensifyConfig {
  std::size_t gamma = 4;      // replication factor; equals the upsampling rate
  double eta = 0.01;          // Gaussian perturbation level, normalized units
  std::uint64_t rng_seed = 0; // callers derive this per patch
};

// Lifts a sparse cloud of M points to gamma*M points by midpoint interpolation.
// Output is replica-major: out[j*M + i] is the midpoint of point i and its
// j-th nearest neighbor (replica 0 pairs the point with itself), plus
// eta-scaled Gaussian noise. Deterministic given (sparse, cfg).
// Throws std::invalid_argument when sparse.size() < cfg.gamma.
PointCloud midpoint_densify(const PointCloud& sparse, const DensifyConfig& cfg);

}  // namespace pufm
