#pragma once

#include <cstdint>
#include <random>

#include "pufm/vec3.hpp"

namespace pufm {

// splitmix64 finalizer; used to turn (seed, tags...) into well-mixed stream seeds.
inline std::uint64_t mix64(std::uint64_t v) {
  v += 0x9e3779b97f4a7c15ULL;
  v = (v ^ (v >> 30)) * 0xbf58476d1ce4e5b9ULL;
  v = (v ^ (v >> 27)) * 0x94d049bb133111ebULL;
  return v ^ (v >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base) { return mix64(base); }

template <typename... Rest>
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t next, Rest... rest) {
  return derive_seed(mix64(base ^ mix64(next)), rest...);
}

// FNV-1a over a string key folded into the seed chain, so call sites can label
// independent streams ("densify", "t", ...) without collisions.
inline std::uint64_t tag_hash(const char* tag) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const char* p = tag; *p; ++p) h = (h ^ static_cast<unsigned char>(*p)) * 1099511628211ULL;
  return h;
}

template <typename... Rest>
std::uint64_t derive_seed(std::uint64_t base, const char* tag, Rest... rest) {
  return derive_seed(base, tag_hash(tag), rest...);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double normal01(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

inline Vec3 normal_vec3(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  double a = n(rng), b = n(rng), c = n(rng);
  return {a, b, c};
}

}  // namespace pufm
