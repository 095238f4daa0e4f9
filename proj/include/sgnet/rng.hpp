#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace sgnet {

using Rng = std::mt19937_64;

// Mixes a seed with stream coordinates (epoch, sample index, ...) so every
// stream is reproducible independently of evaluation order.
inline std::uint64_t derive_seed(std::uint64_t seed,
                                 std::initializer_list<std::uint64_t> keys) {
  auto mix = [](std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(seed);
  for (auto k : keys) h = mix(h ^ mix(k));
  return h;
}

// Uniform double in [0,1) from the top 53 bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

}  // namespace sgnet
