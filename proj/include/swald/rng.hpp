#pragma once

#include <cmath>
#include <cstdint>

#include "swald/distributions.hpp"

namespace swald {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ull;

// splitmix64 finalizer
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

// Stream layout: substream k of a master seed gets its own statistically
// independent generator. Used for per-draw and per-replication streams so
// results do not depend on thread count.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return mix64(mix64(master + kGoldenGamma) + kGoldenGamma * (stream + 1));
}

// Counter-based splitmix64. Deterministic across platforms and builds.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += kGoldenGamma;
    return mix64(state_);
  }

  // strictly inside (0,1): (k + 0.5) * 2^-53 with k in [0, 2^53)
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() { return normal_quantile(uniform()); }

  double exponential(double rate) { return -std::log(uniform()) / rate; }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t state_;
};

}  // namespace swald
