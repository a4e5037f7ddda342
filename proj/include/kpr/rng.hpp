#pragma once

// Deterministic random numbers for sweeps. splitmix64 with an explicit seed;
// uniform doubles are built from the top 53 bits so streams are bit-identical
// across platforms (the standard distributions are not).

#include <cstdint>

namespace kpr {

struct SplitMix64 {
  std::uint64_t state = 0x9e3779b97f4a7c15ULL;

  explicit SplitMix64(std::uint64_t seed = 42) : state(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Independent stream for sample index i under a fixed master seed; used to
  // make multithreaded sweeps order-independent.
  static SplitMix64 for_index(std::uint64_t seed, std::uint64_t index) {
    SplitMix64 mix(seed ^ (0x9e3779b97f4a7c15ULL + index * 0xbf58476d1ce4e5b9ULL));
    mix.next_u64();
    return mix;
  }
};

}  // namespace kpr
