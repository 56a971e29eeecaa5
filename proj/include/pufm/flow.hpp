#pragma once

#include <functional>
#include <vector>

#include "pufm/geometry.hpp"
#include "pufm/rng.hpp"

namespace pufm {

enum class TimestepLaw { kCosine, kUniform };
enum class SamplerMode { kEuler, kLiteral };

// Straight-path schedule: alpha_t = t, sigma_t = 1 - t.
struct ScheduleConfig {
  TimestepLaw t_law = TimestepLaw::kCosine;
  std::size_t num_steps = 5;
  SamplerMode sampler_mode = SamplerMode::kEuler;
};

// Interpolant with its frozen endpoints.
struct FlowState {
  PointCloud x_t;
  double t = 0.0;
  PointCloud x0_tilde;    // densified sparse endpoint
  PointCloud x1_aligned;  // transport-permuted dense endpoint
};

// Training timestep draw. Cosine law: t = 1 - cos(s*pi/2) with s ~ U[0,1],
// which concentrates density near t = 0.
double sample_t(Rng& rng, const ScheduleConfig& cfg);

// x_t[i] = x0_tilde[i] + t * (x1_aligned[i] - x0_tilde[i]); at t = 0 this is
// bitwise x0_tilde. Throws std::invalid_argument on mismatch or t outside [0,1].
FlowState interpolate(const PointCloud& x0_tilde, const PointCloud& x1_aligned, double t);

// target[i] = x1_aligned[i] - x0_tilde[i]; constant along the straight path.
std::vector<Vec3> velocity_target(const PointCloud& x0_tilde, const PointCloud& x1_aligned);

// Mean over points and coordinates of the squared difference.
double fm_loss(const std::vector<Vec3>& pred, const std::vector<Vec3>& target);

// A velocity field: per-point 3-vectors for a cloud at time t.
using VelocityField = std::function<std::vector<Vec3>(const PointCloud&, double)>;

// Integrates the field from the densified sparse cloud. Euler mode steps
// x += (1/S) * v(x, k/S) on the uniform grid. Literal mode instead applies
// x <- (1 - d/t')*x + (d/t')*v(x, t) with t' = t + d, treating the field
// output as a target predictor. If trajectory is non-null it receives the
// initial state plus one state per step. Throws NumericalError when the field
// emits non-finite values.
PointCloud euler_sample(const VelocityField& field, const PointCloud& x0_tilde,
                        const ScheduleConfig& cfg, std::vector<PointCloud>* trajectory = nullptr);

}  // namespace pufm
