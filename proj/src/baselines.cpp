#include "pufm/baselines.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "pufm/errors.hpp"

namespace pufm {

namespace {
constexpr double kHalfPi = std::numbers::pi / 2.0;
}

DiffusionSchedule::DiffusionSchedule(std::size_t num_train_steps) {
  if (num_train_steps == 0)
    throw std::invalid_argument("DiffusionSchedule: need at least one step");
  alpha.resize(num_train_steps + 1);
  sigma.resize(num_train_steps + 1);
  for (std::size_t i = 0; i <= num_train_steps; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(num_train_steps);
    alpha[i] = alpha_of(t);
    sigma[i] = sigma_of(t);
  }
  // Snap the boundaries so the clean and pure-noise endpoints are exact.
  alpha.front() = 0.0;
  sigma.front() = 1.0;
  alpha.back() = 1.0;
  sigma.back() = 0.0;
}

double DiffusionSchedule::alpha_of(double t) const { return std::sin(kHalfPi * t); }
double DiffusionSchedule::sigma_of(double t) const { return std::cos(kHalfPi * t); }
double DiffusionSchedule::alpha_dot(double t) const { return kHalfPi * std::cos(kHalfPi * t); }
double DiffusionSchedule::sigma_dot(double t) const { return -kHalfPi * std::sin(kHalfPi * t); }

std::pair<PointCloud, PointCloud> diffuse_forward(const PointCloud& x1_aligned,
                                                  std::size_t t_index, Rng& rng,
                                                  const DiffusionSchedule& sched) {
  check_cloud(x1_aligned);
  if (t_index >= sched.alpha.size())
    throw std::invalid_argument("diffuse_forward: t_index out of range");
  const double a = sched.alpha[t_index];
  const double s = sched.sigma[t_index];
  PointCloud x_t(x1_aligned.size()), eps(x1_aligned.size());
  for (std::size_t i = 0; i < x1_aligned.size(); ++i) {
    eps[i] = normal_vec3(rng);
    x_t[i] = x1_aligned[i] * a + eps[i] * s;
  }
  return {std::move(x_t), std::move(eps)};
}

double baseline_loss(const std::vector<Vec3>& pred, const PointCloud& target) {
  if (pred.size() != target.size() || pred.empty())
    throw std::invalid_argument("baseline_loss: shape mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += dist2(pred[i], target[i]);
  return sum / (3.0 * static_cast<double>(pred.size()));
}

PointCloud baseline_sample(const VelocityField& field, std::size_t num_points, std::size_t steps,
                           const DiffusionSchedule& sched, Rng& rng, const PointCloud* start,
                           std::vector<PointCloud>* trajectory) {
  if (steps == 0) throw std::invalid_argument("baseline_sample: steps must be positive");
  if (num_points == 0) throw std::invalid_argument("baseline_sample: need at least one point");

  PointCloud x;
  if (start) {
    if (start->size() != num_points)
      throw std::invalid_argument("baseline_sample: start size mismatch");
    x = *start;
  } else {
    x.resize(num_points);
    for (Vec3& p : x) p = normal_vec3(rng);
  }

  // With x_t = alpha·x1 + sigma·eps and the net predicting u = x1 - eps,
  // eliminating (x1, eps) gives
  //   dx/dt = [(alpha' + sigma')·x + (alpha'·sigma - sigma'·alpha)·u] / (alpha + sigma),
  // and for this schedule alpha'·sigma - sigma'·alpha reduces to pi/2 while
  // alpha + sigma stays in [1, sqrt(2)].
  const double dt = 1.0 / static_cast<double>(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    if (trajectory) trajectory->push_back(x);
    const double t = static_cast<double>(k) * dt;
    const double a = sched.alpha_of(t), s = sched.sigma_of(t);
    const double ad = sched.alpha_dot(t), sd = sched.sigma_dot(t);
    const std::vector<Vec3> u = field(x, t);
    if (u.size() != x.size()) throw std::invalid_argument("baseline_sample: field size mismatch");
    const double mix = ad * s - sd * a;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const Vec3 dxdt = (x[i] * (ad + sd) + u[i] * mix) / (a + s);
      x[i] += dxdt * dt;
      if (!finite(x[i])) throw NumericalError("baseline_sample: non-finite state");
    }
  }
  if (trajectory) trajectory->push_back(x);
  return x;
}

}  // namespace pufm
