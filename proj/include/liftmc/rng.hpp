#pragma once

// Deterministic random number generation.
//
// The engine is std::mt19937_64 (its output sequence is fixed by the
// standard), and all distribution transforms are implemented here rather
// than taken from <random>, whose distributions are implementation-defined.
// Together this makes every seeded draw byte-reproducible across builds on
// the same platform.

#include <cmath>
#include <cstdint>
#include <random>

namespace liftmc {

// SplitMix64 output function; used for seed mixing and derivation.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Pure function of (master seed, grid cell index, trial index); used so that
// experiment trials are independent streams with no cross-trial coupling.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t cell,
                                 std::uint64_t trial) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ (0xA24BAED4963EE407ULL * (cell + 1)));
  h = splitmix64(h ^ (0x9FB21C651E98DF25ULL * (trial + 1)));
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(splitmix64(seed)) {}

  std::uint64_t next_u64() { return eng_(); }

  // Unbiased integer in [0, bound) via rejection sampling.
  std::uint64_t uniform_below(std::uint64_t bound) {
    if (bound == 0) return 0;
    const std::uint64_t threshold = (-bound) % bound;  // == 2^64 mod bound
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via the polar method; caches the spare deviate.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace liftmc
