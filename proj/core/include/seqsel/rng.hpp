#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace seqsel {

/// Deterministic random source. All draws are built from raw mt19937 output,
/// never from std::*_distribution, so a given seed produces the same stream on
/// every standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                      static_cast<std::uint32_t>(seed >> 32)};
    engine_.seed(seq);
  }

  std::uint32_t next_u32() { return engine_(); }

  /// Unbiased integer in [0, bound); bound must be > 0.
  std::size_t uniform_index(std::size_t bound) {
    const std::uint64_t b = bound;
    // rejection sampling over the largest multiple of bound below 2^32
    const std::uint64_t limit = (0x100000000ull / b) * b;
    std::uint64_t r;
    do {
      r = next_u32();
    } while (r >= limit);
    return static_cast<std::size_t>(r % b);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() {
    const std::uint64_t hi = next_u32() >> 5;   // 27 bits
    const std::uint64_t lo = next_u32() >> 6;   // 26 bits
    return static_cast<double>((hi << 26) | lo) * (1.0 / 9007199254740992.0);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal via Box-Muller (cosine branch only, no rejection).
  double gaussian() {
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  /// Derive an independent stream id from a base seed (splitmix64 step).
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937 engine_;
};

}  // namespace seqsel
