#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace affgrasp {

/// Deterministic RNG: mt19937_64 engine with explicit transforms. The
/// std::*_distribution adapters are implementation-defined, which would break
/// the byte-identical reproducibility contract, so we roll the few transforms
/// we need on top of the standardized engine.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Multiply-shift; bias is < 2^-64 per draw.
  int uniform_int(int n) {
    return static_cast<int>((static_cast<__uint128_t>(eng_()) * static_cast<__uint128_t>(n)) >> 64);
  }

  /// Standard normal via Box-Muller (no cached spare, so the draw count per
  /// call is fixed).
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::mt19937_64 eng_;
};

/// splitmix64 step, used to derive independent per-task seeds from
/// (base, key...) tuples without correlated streams.
inline std::uint64_t split_mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
  return split_mix(split_mix(base ^ 0x243f6a8885a308d3ULL) ^ split_mix(a) ^ (b * 0x100000001b3ULL));
}

}  // namespace affgrasp
