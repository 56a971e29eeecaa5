#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pufm/errors.hpp"
#include "pufm/geometry.hpp"
#include "pufm/rng.hpp"

namespace pufm {

// Sinusoidal embedding of a scalar timestep: interleaved sin/cos at
// geometrically spaced frequencies.
struct TimeEmbedConfig {
  std::size_t dim = 64;  // even
  double freq_min = 1.0;
  double freq_max = 1e4;
};

template <typename T>
std::vector<T> time_embed(T t, const TimeEmbedConfig& cfg) {
  if (cfg.dim == 0 || cfg.dim % 2 != 0)
    throw std::invalid_argument("time_embed: dim must be even and positive");
  const std::size_t half = cfg.dim / 2;
  std::vector<T> out(cfg.dim);
  for (std::size_t k = 0; k < half; ++k) {
    const double expo = half == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(half - 1);
    const double freq = cfg.freq_min * std::pow(cfg.freq_max / cfg.freq_min, expo);
    const double phase = freq * static_cast<double>(t);
    out[2 * k] = static_cast<T>(std::sin(phase));
    out[2 * k + 1] = static_cast<T>(std::cos(phase));
  }
  return out;
}

// Shape record for the permutation-equivariant velocity field. The per-point
// encoder (3 -> enc_hidden -> feat) is shared across points; a feature-wise
// max over points gives the global descriptor; the decoder maps
// [point feature | global | (cond point feature | cond global) | time embed]
// to a 3-vector. `conditioned` is the diffusion-baseline variant, where a
// second cloud is run through the same encoder and its features concatenated.
struct NetArch {
  std::size_t enc_hidden = 64;
  std::size_t feat = 128;
  std::size_t dec_hidden = 64;
  std::size_t time_dim = 64;
  bool conditioned = false;

  std::size_t decoder_in() const { return 2 * feat + time_dim + (conditioned ? 2 * feat : 0); }

  // Flat layout, in order: enc_w1, enc_b1, enc_w2, enc_b2, dec_w1, dec_b1,
  // dec_w2, dec_b2. Row-major, out x in.
  std::size_t param_count() const {
    return enc_hidden * 3 + enc_hidden + feat * enc_hidden + feat + dec_hidden * decoder_in() +
           dec_hidden + 3 * dec_hidden + 3;
  }

  bool operator==(const NetArch&) const = default;
};

template <typename T>
T silu(T x) {
  const T s = T(1) / (T(1) + std::exp(-x));
  return x * s;
}

template <typename T>
T silu_grad(T x) {
  const T s = T(1) / (T(1) + std::exp(-x));
  return s * (T(1) + x * (T(1) - s));
}

template <typename T>
struct VelocityNet {
  NetArch arch;
  std::vector<T> params;

  VelocityNet() = default;
  explicit VelocityNet(const NetArch& a) : arch(a), params(a.param_count(), T(0)) {}

  // Encoder activations for one cloud, kept for the backward pass.
  struct EncoderTape {
    std::vector<T> input;    // n*3
    std::vector<T> h1, a1;   // n*enc_hidden
    std::vector<T> h2, f;    // n*feat
    std::vector<T> pooled;              // feat
    std::vector<std::size_t> argmax;    // feat
    std::size_t n = 0;
  };

  struct Tape {
    EncoderTape enc;
    EncoderTape cond;        // used only when arch.conditioned
    std::vector<T> z;        // n*decoder_in
    std::vector<T> h3, a3;   // n*dec_hidden
    std::vector<T> out;      // n*3
  };

  std::size_t off_enc_w1() const { return 0; }
  std::size_t off_enc_b1() const { return off_enc_w1() + arch.enc_hidden * 3; }
  std::size_t off_enc_w2() const { return off_enc_b1() + arch.enc_hidden; }
  std::size_t off_enc_b2() const { return off_enc_w2() + arch.feat * arch.enc_hidden; }
  std::size_t off_dec_w1() const { return off_enc_b2() + arch.feat; }
  std::size_t off_dec_b1() const { return off_dec_w1() + arch.dec_hidden * arch.decoder_in(); }
  std::size_t off_dec_w2() const { return off_dec_b1() + arch.dec_hidden; }
  std::size_t off_dec_b2() const { return off_dec_w2() + 3 * arch.dec_hidden; }

  void run_encoder(const std::vector<T>& flat_points, EncoderTape& tape) const;

  // flat_points is n*3, row-major. cond must be non-null iff arch.conditioned.
  // Returns per-point 3-vectors (n*3) and fills the tape when given.
  std::vector<T> forward(const std::vector<T>& flat_points, T t,
                         const std::vector<T>* cond = nullptr, Tape* tape = nullptr) const;

  // Exact reverse-mode gradient of the recorded forward; upstream is n*3.
  std::vector<T> backward(const Tape& tape, const std::vector<T>& upstream) const;
};

extern template struct VelocityNet<float>;
extern template struct VelocityNet<double>;

template <typename T>
struct AdamState {
  std::vector<T> m, v;
  std::uint64_t step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit AdamState(std::size_t n = 0) : m(n, T(0)), v(n, T(0)) {}
};

// Standard bias-corrected Adam update, in place. Throws NumericalError on
// non-finite gradients or if parameters leave the finite range.
template <typename T>
void adam_step(std::vector<T>& params, const std::vector<T>& grads, AdamState<T>& state);

extern template void adam_step<float>(std::vector<float>&, const std::vector<float>&,
                                      AdamState<float>&);
extern template void adam_step<double>(std::vector<double>&, const std::vector<double>&,
                                       AdamState<double>&);

// Fan-in uniform init for hidden layers; the final decoder layer is zeroed so
// the untrained field is identically zero.
template <typename T>
VelocityNet<T> init_params(const NetArch& arch, Rng& rng);

extern template VelocityNet<float> init_params<float>(const NetArch&, Rng&);
extern template VelocityNet<double> init_params<double>(const NetArch&, Rng&);

// Conversions between the double-precision cloud type and flat net input.
template <typename T>
std::vector<T> flatten(const PointCloud& cloud) {
  std::vector<T> out(cloud.size() * 3);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    out[3 * i] = static_cast<T>(cloud[i].x);
    out[3 * i + 1] = static_cast<T>(cloud[i].y);
    out[3 * i + 2] = static_cast<T>(cloud[i].z);
  }
  return out;
}

template <typename T>
std::vector<Vec3> unflatten(const std::vector<T>& flat) {
  std::vector<Vec3> out(flat.size() / 3);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = {static_cast<double>(flat[3 * i]), static_cast<double>(flat[3 * i + 1]),
              static_cast<double>(flat[3 * i + 2])};
  return out;
}

}  // namespace pufm
