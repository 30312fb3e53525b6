#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace fairtab {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; derives independent child seeds from a parent seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Named seed streams, so every consumer of randomness is independent of the others.
enum class SeedStream : std::uint64_t {
  kSplit = 1,
  kBackboneInit = 2,
  kSensitiveInit = 3,
  kBatchOrder = 4,
  kReplicate = 5,
};

inline std::uint64_t derive_seed(std::uint64_t seed, SeedStream stream, std::uint64_t index = 0) {
  return mix_seed(mix_seed(seed, static_cast<std::uint64_t>(stream)), index);
}

// Platform-independent draws built directly on the 64-bit engine output.

/// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Uniform integer in [0, n); modulo bias is below 2^-40 for n < 2^24.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) { return rng() % n; }

/// Standard normal by Box-Muller (one draw per call).
inline double standard_normal(Rng& rng) {
  const double u1 = 1.0 - uniform01(rng);  // (0, 1]
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace fairtab
