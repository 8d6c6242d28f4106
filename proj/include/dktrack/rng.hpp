// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>

namespace dktrack {

// SplitMix64 finalizer. Statistically solid for sequential counters, which is
// all we need from a desk-scale generator.
inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_keys(std::uint64_t a, std::uint64_t b) noexcept {
  return splitmix64(splitmix64(a) ^ (b + 0x9E3779B97F4A7C15ull));
}

// Counter-based generator: every draw is a pure hash of (key, counter).
// Splitting derives an independent child key without disturbing the parent,
// so each weight bank owns a fixed stream and runs are bit-identical for a
// given seed no matter which components are instantiated.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix_keys(seed, stream)) {}

  Rng split(std::uint64_t substream) const {
    return Rng(key_, substream ^ 0xD1B54A32D192ED03ull);
  }

  std::uint64_t next_u64() {
    return splitmix64(key_ + (counter_++) * 0x9E3779B97F4A7C15ull);
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // Box-Muller. Two fresh draws per value; no cached state, so interleaving
  // with other draw kinds stays reproducible.
  double normal() {
    double u1 = next_double();
    double u2 = next_double();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.28318530717958647692528676655900577 * u2);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace dktrack
