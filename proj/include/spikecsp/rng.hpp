#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace spikecsp {

/// One 64-bit stream per run, consumed in event order.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent run seeds.
inline std::uint64_t mix_seed(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Run seed for run `index` of a batch started from `base_seed`.
inline std::uint64_t derive_run_seed(std::uint64_t base_seed, std::uint64_t index) {
  return mix_seed(base_seed ^ mix_seed(index + 1));
}

inline Rng make_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return Rng(seq);
}

/// Uniform in (0, 1], 53-bit resolution. Never returns 0.
inline double uniform_open0(Rng& rng) {
  return static_cast<double>((rng() >> 11) + 1) * 0x1.0p-53;
}

/// Exp(1) draw.
inline double standard_exponential(Rng& rng) { return -std::log(uniform_open0(rng)); }

inline double standard_normal(Rng& rng) {
  // Box-Muller, one value per call.
  const double u1 = uniform_open0(rng);
  const double u2 = uniform_open0(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace spikecsp
