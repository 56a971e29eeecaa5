#include "pufm/velocity_net.hpp"

#include <algorithm>
#include <cmath>

namespace pufm {

namespace {

// y = W x + b, W row-major (out x in).
template <typename T>
void affine(const T* w, const T* b, const T* x, T* y, std::size_t out, std::size_t in) {
  for (std::size_t o = 0; o < out; ++o) {
    T acc = b[o];
    const T* row = w + o * in;
    for (std::size_t i = 0; i < in; ++i) acc += row[i] * x[i];
    y[o] = acc;
  }
}

template <typename T>
void affine_backward(const T* w, const T* x, const T* dy, T* dw, T* db, T* dx, std::size_t out,
                     std::size_t in) {
  for (std::size_t o = 0; o < out; ++o) {
    const T g = dy[o];
    db[o] += g;
    T* dwrow = dw + o * in;
    for (std::size_t i = 0; i < in; ++i) dwrow[i] += g * x[i];
  }
  if (dx) {
    for (std::size_t i = 0; i < in; ++i) {
      T acc = T(0);
      for (std::size_t o = 0; o < out; ++o) acc += w[o * in + i] * dy[o];
      dx[i] = acc;
    }
  }
}

}  // namespace

template <typename T>
void VelocityNet<T>::run_encoder(const std::vector<T>& flat_points, EncoderTape& tape) const {
  const std::size_t n = flat_points.size() / 3;
  const std::size_t eh = arch.enc_hidden, ft = arch.feat;
  tape.n = n;
  tape.input = flat_points;
  tape.h1.resize(n * eh);
  tape.a1.resize(n * eh);
  tape.h2.resize(n * ft);
  tape.f.resize(n * ft);

  const T* w1 = params.data() + off_enc_w1();
  const T* b1 = params.data() + off_enc_b1();
  const T* w2 = params.data() + off_enc_w2();
  const T* b2 = params.data() + off_enc_b2();

  for (std::size_t i = 0; i < n; ++i) {
    affine(w1, b1, flat_points.data() + 3 * i, tape.h1.data() + i * eh, eh, 3);
    for (std::size_t c = 0; c < eh; ++c) tape.a1[i * eh + c] = silu(tape.h1[i * eh + c]);
    affine(w2, b2, tape.a1.data() + i * eh, tape.h2.data() + i * ft, ft, eh);
    for (std::size_t c = 0; c < ft; ++c) tape.f[i * ft + c] = silu(tape.h2[i * ft + c]);
  }

  // Feature-wise max over points; the first maximizer wins so routing is
  // deterministic.
  tape.pooled.assign(ft, T(0));
  tape.argmax.assign(ft, 0);
  for (std::size_t c = 0; c < ft; ++c) {
    T best = tape.f[c];
    std::size_t best_i = 0;
    for (std::size_t i = 1; i < n; ++i) {
      const T v = tape.f[i * ft + c];
      if (v > best) {
        best = v;
        best_i = i;
      }
    }
    tape.pooled[c] = best;
    tape.argmax[c] = best_i;
  }
}

template <typename T>
std::vector<T> VelocityNet<T>::forward(const std::vector<T>& flat_points, T t,
                                       const std::vector<T>* cond, Tape* tape) const {
  if (params.size() != arch.param_count())
    throw std::invalid_argument("velocity net: parameter vector does not match architecture");
  if (flat_points.empty() || flat_points.size() % 3 != 0)
    throw std::invalid_argument("velocity net: input must be a non-empty n*3 array");
  if (arch.conditioned != (cond != nullptr))
    throw std::invalid_argument("velocity net: condition cloud required iff arch.conditioned");
  if (cond && (cond->empty() || cond->size() != flat_points.size()))
    throw std::invalid_argument("velocity net: condition cloud must match input cardinality");

  Tape local;
  Tape& tp = tape ? *tape : local;
  run_encoder(flat_points, tp.enc);
  if (cond) run_encoder(*cond, tp.cond);

  const std::size_t n = tp.enc.n;
  const std::size_t ft = arch.feat, dh = arch.dec_hidden, din = arch.decoder_in();
  const std::vector<T> tau = time_embed(t, TimeEmbedConfig{arch.time_dim, 1.0, 1e4});

  tp.z.resize(n * din);
  tp.h3.resize(n * dh);
  tp.a3.resize(n * dh);
  tp.out.resize(n * 3);

  const T* w3 = params.data() + off_dec_w1();
  const T* b3 = params.data() + off_dec_b1();
  const T* w4 = params.data() + off_dec_w2();
  const T* b4 = params.data() + off_dec_b2();

  for (std::size_t i = 0; i < n; ++i) {
    T* z = tp.z.data() + i * din;
    std::size_t at = 0;
    std::copy_n(tp.enc.f.data() + i * ft, ft, z + at);
    at += ft;
    std::copy_n(tp.enc.pooled.data(), ft, z + at);
    at += ft;
    if (cond) {
      std::copy_n(tp.cond.f.data() + i * ft, ft, z + at);
      at += ft;
      std::copy_n(tp.cond.pooled.data(), ft, z + at);
      at += ft;
    }
    std::copy_n(tau.data(), arch.time_dim, z + at);

    affine(w3, b3, z, tp.h3.data() + i * dh, dh, din);
    for (std::size_t c = 0; c < dh; ++c) tp.a3[i * dh + c] = silu(tp.h3[i * dh + c]);
    affine(w4, b4, tp.a3.data() + i * dh, tp.out.data() + i * 3, 3, dh);
  }

  for (T v : tp.out)
    if (!std::isfinite(v)) throw NumericalError("velocity net: non-finite activation");
  return tp.out;
}

template <typename T>
std::vector<T> VelocityNet<T>::backward(const Tape& tape, const std::vector<T>& upstream) const {
  const std::size_t n = tape.enc.n;
  if (upstream.size() != n * 3)
    throw std::invalid_argument("velocity net backward: upstream gradient shape mismatch");

  const std::size_t eh = arch.enc_hidden, ft = arch.feat, dh = arch.dec_hidden;
  const std::size_t din = arch.decoder_in();

  std::vector<T> grads(arch.param_count(), T(0));
  T* g_w1 = grads.data() + off_enc_w1();
  T* g_b1 = grads.data() + off_enc_b1();
  T* g_w2 = grads.data() + off_enc_w2();
  T* g_b2 = grads.data() + off_enc_b2();
  T* g_w3 = grads.data() + off_dec_w1();
  T* g_b3 = grads.data() + off_dec_b1();
  T* g_w4 = grads.data() + off_dec_w2();
  T* g_b4 = grads.data() + off_dec_b2();

  const T* w3 = params.data() + off_dec_w1();
  const T* w4 = params.data() + off_dec_w2();

  // Per-point feature gradients plus pooled-feature accumulators for each
  // encoder pass (the pooled vector feeds every point's decoder input).
  std::vector<T> d_f(n * ft, T(0)), d_pool(ft, T(0));
  std::vector<T> d_fc, d_pool_c;
  if (arch.conditioned) {
    d_fc.assign(n * ft, T(0));
    d_pool_c.assign(ft, T(0));
  }

  std::vector<T> d_h3(dh), d_a3(dh), d_z(din);
  for (std::size_t i = 0; i < n; ++i) {
    affine_backward(w4, tape.a3.data() + i * dh, upstream.data() + i * 3, g_w4, g_b4, d_a3.data(),
                    3, dh);
    for (std::size_t c = 0; c < dh; ++c) d_h3[c] = d_a3[c] * silu_grad(tape.h3[i * dh + c]);
    affine_backward(w3, tape.z.data() + i * din, d_h3.data(), g_w3, g_b3, d_z.data(), dh, din);

    std::size_t at = 0;
    for (std::size_t c = 0; c < ft; ++c) d_f[i * ft + c] += d_z[at + c];
    at += ft;
    for (std::size_t c = 0; c < ft; ++c) d_pool[c] += d_z[at + c];
    at += ft;
    if (arch.conditioned) {
      for (std::size_t c = 0; c < ft; ++c) d_fc[i * ft + c] += d_z[at + c];
      at += ft;
      for (std::size_t c = 0; c < ft; ++c) d_pool_c[c] += d_z[at + c];
      at += ft;
    }
    // time-embed slots have no trainable parameters upstream
  }

  auto encoder_backward = [&](const EncoderTape& enc, std::vector<T>& df, std::vector<T>& dpool) {
    for (std::size_t c = 0; c < ft; ++c) df[enc.argmax[c] * ft + c] += dpool[c];
    std::vector<T> d_h2(ft), d_a1(eh), d_h1(eh);
    for (std::size_t i = 0; i < enc.n; ++i) {
      for (std::size_t c = 0; c < ft; ++c)
        d_h2[c] = df[i * ft + c] * silu_grad(enc.h2[i * ft + c]);
      affine_backward(params.data() + off_enc_w2(), enc.a1.data() + i * eh, d_h2.data(), g_w2,
                      g_b2, d_a1.data(), ft, eh);
      for (std::size_t c = 0; c < eh; ++c) d_h1[c] = d_a1[c] * silu_grad(enc.h1[i * eh + c]);
      affine_backward(params.data() + off_enc_w1(), enc.input.data() + 3 * i, d_h1.data(), g_w1,
                      g_b1, static_cast<T*>(nullptr), eh, 3);
    }
  };

  encoder_backward(tape.enc, d_f, d_pool);
  if (arch.conditioned) encoder_backward(tape.cond, d_fc, d_pool_c);

  return grads;
}

template <typename T>
void adam_step(std::vector<T>& params, const std::vector<T>& grads, AdamState<T>& state) {
  if (grads.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size())
    throw std::invalid_argument("adam_step: shape mismatch");
  for (T g : grads)
    if (!std::isfinite(g)) throw NumericalError("adam_step: non-finite gradient");

  state.step += 1;
  const double b1 = state.beta1, b2 = state.beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = static_cast<double>(grads[i]);
    const double m = b1 * static_cast<double>(state.m[i]) + (1.0 - b1) * g;
    const double v = b2 * static_cast<double>(state.v[i]) + (1.0 - b2) * g * g;
    state.m[i] = static_cast<T>(m);
    state.v[i] = static_cast<T>(v);
    const double update = state.lr * (m / corr1) / (std::sqrt(v / corr2) + state.eps);
    params[i] = static_cast<T>(static_cast<double>(params[i]) - update);
  }
  for (T p : params)
    if (!std::isfinite(p)) throw NumericalError("adam_step: parameters left the finite range");
}

template <typename T>
VelocityNet<T> init_params(const NetArch& arch, Rng& rng) {
  VelocityNet<T> net(arch);
  auto fill_uniform = [&](std::size_t offset, std::size_t count, std::size_t fan_in) {
    const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::size_t i = 0; i < count; ++i) net.params[offset + i] = static_cast<T>(dist(rng));
  };
  fill_uniform(net.off_enc_w1(), arch.enc_hidden * 3, 3);
  fill_uniform(net.off_enc_w2(), arch.feat * arch.enc_hidden, arch.enc_hidden);
  fill_uniform(net.off_dec_w1(), arch.dec_hidden * arch.decoder_in(), arch.decoder_in());
  // biases and the whole final layer stay zero: the fresh net is the identity flow
  return net;
}

template struct VelocityNet<float>;
template struct VelocityNet<double>;
template void adam_step<float>(std::vector<float>&, const std::vector<float>&, AdamState<float>&);
template void adam_step<double>(std::vector<double>&, const std::vector<double>&,
                                AdamState<double>&);
template VelocityNet<float> init_params<float>(const NetArch&, Rng&);
template VelocityNet<double> init_params<double>(const NetArch&, Rng&);

}  // namespace pufm
