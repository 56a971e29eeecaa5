#include "pufm/flow.hpp"

#include <cmath>
#include <stdexcept>

#include "pufm/errors.hpp"

namespace pufm {

double sample_t(Rng& rng, const ScheduleConfig& cfg) {
  const double s = uniform01(rng);
  if (cfg.t_law == TimestepLaw::kUniform) return s;
  return 1.0 - std::cos(s * M_PI / 2.0);
}

FlowState interpolate(const PointCloud& x0_tilde, const PointCloud& x1_aligned, double t) {
  if (x0_tilde.size() != x1_aligned.size())
    throw std::invalid_argument("interpolate: endpoint cardinalities differ");
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("interpolate: t outside [0,1]");

  FlowState state;
  state.t = t;
  state.x0_tilde = x0_tilde;
  state.x1_aligned = x1_aligned;
  state.x_t.resize(x0_tilde.size());
  for (std::size_t i = 0; i < x0_tilde.size(); ++i)
    state.x_t[i] = x0_tilde[i] + t * (x1_aligned[i] - x0_tilde[i]);
  return state;
}

std::vector<Vec3> velocity_target(const PointCloud& x0_tilde, const PointCloud& x1_aligned) {
  if (x0_tilde.size() != x1_aligned.size())
    throw std::invalid_argument("velocity_target: endpoint cardinalities differ");
  std::vector<Vec3> target(x0_tilde.size());
  for (std::size_t i = 0; i < x0_tilde.size(); ++i) target[i] = x1_aligned[i] - x0_tilde[i];
  return target;
}

double fm_loss(const std::vector<Vec3>& pred, const std::vector<Vec3>& target) {
  if (pred.size() != target.size()) throw std::invalid_argument("fm_loss: shape mismatch");
  if (pred.empty()) throw std::invalid_argument("fm_loss: empty prediction");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += dist2(pred[i], target[i]);
  return sum / (3.0 * static_cast<double>(pred.size()));
}

PointCloud euler_sample(const VelocityField& field, const PointCloud& x0_tilde,
                        const ScheduleConfig& cfg, std::vector<PointCloud>* trajectory) {
  check_cloud(x0_tilde);
  if (cfg.num_steps < 1) throw std::invalid_argument("euler_sample: num_steps must be >= 1");

  PointCloud x = x0_tilde;
  if (trajectory) {
    trajectory->clear();
    trajectory->push_back(x);
  }
  const double delta = 1.0 / static_cast<double>(cfg.num_steps);
  for (std::size_t k = 0; k < cfg.num_steps; ++k) {
    const double t = static_cast<double>(k) * delta;
    const std::vector<Vec3> v = field(x, t);
    if (v.size() != x.size()) throw std::invalid_argument("euler_sample: field output size mismatch");
    for (const Vec3& vi : v)
      if (!finite(vi)) throw NumericalError("euler_sample: velocity field produced NaN/Inf");

    if (cfg.sampler_mode == SamplerMode::kEuler) {
      for (std::size_t i = 0; i < x.size(); ++i) x[i] += delta * v[i];
    } else {
      // t' = t + delta keeps the first step well defined.
      const double w = delta / (t + delta);
      for (std::size_t i = 0; i < x.size(); ++i) x[i] = (1.0 - w) * x[i] + w * v[i];
    }
    if (trajectory) trajectory->push_back(x);
  }
  return x;
}

}  // namespace pufm
