#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "pufm/flow.hpp"
#include "pufm/geometry.hpp"
#include "pufm/rng.hpp"

namespace pufm {

// Cosine-law noising schedule for the noise-to-data baseline. Discrete arrays
// cover t_index ∈ [0, T]; the continuous accessors give the same law and its
// time derivative for the sampling ODE.
struct DiffusionSchedule {
  std::vector<double> alpha;  // increasing, alpha[0] = 0, alpha[T] = 1
  std::vector<double> sigma;  // decreasing, sigma[0] = 1, sigma[T] = 0

  explicit DiffusionSchedule(std::size_t num_train_steps = 100);
  std::size_t num_steps() const { return alpha.size() - 1; }

  double alpha_of(double t) const;
  double sigma_of(double t) const;
  double alpha_dot(double t) const;
  double sigma_dot(double t) const;
};

// x_t = alpha[t]·x1 + sigma[t]·eps with fresh standard normal eps; returns
// (x_t, eps) so callers can form the training target x1 - eps.
std::pair<PointCloud, PointCloud> diffuse_forward(const PointCloud& x1_aligned,
                                                  std::size_t t_index, Rng& rng,
                                                  const DiffusionSchedule& sched);

// Mean squared error, averaged over points and coordinates.
double baseline_loss(const std::vector<Vec3>& pred, const PointCloud& target);

// Integrates the probability-flow ODE implied by the schedule and a net that
// predicts x1 - eps, from pure Gaussian points at t = 0 to data at t = 1.
// `start` overrides the Gaussian draw (used by oracle tests); `trajectory`
// records the state before each step plus the final one.
PointCloud baseline_sample(const VelocityField& field, std::size_t num_points, std::size_t steps,
                           const DiffusionSchedule& sched, Rng& rng,
                           const PointCloud* start = nullptr,
                           std::vector<PointCloud>* trajectory = nullptr);

}  // namespace pufm
