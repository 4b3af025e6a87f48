#pragma once

#include <cstdint>
#include <cmath>
#include <initializer_list>

namespace copp {

// Splittable deterministic RNG. Streams are keyed by (seed, tag, indices...)
// so that parallel replicates reproduce regardless of scheduling. All
// variate generation is hand-rolled on top of raw 64-bit output to keep
// results independent of the standard library's distribution internals.

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Purpose tags for derived streams.
enum class StreamTag : std::uint64_t {
  split = 1,
  pseudo_actions = 2,
  forest = 3,
  data_gen = 4,
  test_points = 5,
  replicate = 6,
  multi_split = 7,
  density_noise = 8,
  misc = 9,
};

inline std::uint64_t derive_seed(std::uint64_t seed,
                                 std::initializer_list<std::uint64_t> keys) {
  std::uint64_t s = splitmix64(seed);
  for (std::uint64_t k : keys) s = splitmix64(s ^ splitmix64(k));
  return s;
}

inline std::uint64_t derive_seed(std::uint64_t seed, StreamTag tag,
                                 std::uint64_t index = 0) {
  return derive_seed(seed, {static_cast<std::uint64_t>(tag), index});
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(splitmix64(seed ^ 0x2545f4914f6cdd1dULL)) {}

  std::uint64_t next_u64() {
    // xorshift128+ style would need two words; splitmix64 as a counter PRNG
    // is fine for simulation workloads and trivially reproducible.
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t x = state_;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; caches the second variate.
  double normal() {
    if (has_cache_) {
      has_cache_ = false;
      return cache_;
    }
    double u1 = uniform(), u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    cache_ = r * std::sin(a);
    has_cache_ = true;
    return r * std::cos(a);
  }

  // Index in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Rejection-free scaled draw; bias is < 2^-53 and irrelevant here.
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Inverse-CDF draw from a discrete pmf (consumes exactly one uniform).
  int discrete(const double* mass, int m) {
    double u = uniform();
    double cum = 0.0;
    for (int t = 0; t < m; ++t) {
      cum += mass[t];
      if (u < cum) return t;
    }
    return m - 1;
  }

 private:
  std::uint64_t state_;
  double cache_ = 0.0;
  bool has_cache_ = false;
};

}  // namespace copp
