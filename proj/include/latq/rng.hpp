#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "latq/types.hpp"

namespace latq {

// SplitMix64 step (Steele/Lea/Vigna); used to spread raw seeds and to
// derive per-trial substream seeds.
struct SplitMix64 {
  std::uint64_t state;
  explicit SplitMix64(std::uint64_t s) : state(s) {}
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
};

// Deterministic random stream. The engine is std::mt19937_64, whose output
// sequence the standard pins down exactly; variates are produced by the
// explicit arithmetic below (never std::*_distribution, whose output is
// implementation-defined), so a seed replays bit-for-bit everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(SplitMix64(seed).next()) {}

  // Stream for trial `index` of a run seeded with `seed`; distinct indices
  // give decorrelated streams and any subset can be replayed in isolation.
  static Rng substream(std::uint64_t seed, std::uint64_t index) {
    SplitMix64 mix(seed + 0x9E3779B97F4A7C15ull * (index + 1));
    return Rng(mix.next());
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double unif01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * unif01(); }

  // Standard normal via the Box-Muller transform (cosine branch).
  double normal() {
    double u1 = 1.0 - unif01();  // (0, 1], keeps the log finite
    double u2 = unif01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Uniform integer in [0, n). Modulo bias is negligible at the sizes used.
  Index below(Index n) {
    return static_cast<Index>(engine_() % static_cast<std::uint64_t>(n));
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace latq
