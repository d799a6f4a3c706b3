#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace gccakit {

/// splitmix64 step; used to derive independent seeds from a base seed and
/// an index path so that parallel work items never share a stream.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                              std::uint64_t c = 0) {
  std::uint64_t s = base;
  std::uint64_t out = splitmix64(s);
  s ^= a * 0x9E3779B97F4A7C15ULL;
  out ^= splitmix64(s);
  s ^= b * 0xC2B2AE3D27D4EB4FULL;
  out ^= splitmix64(s);
  s ^= c * 0x165667B19E3779F9ULL;
  out ^= splitmix64(s);
  return out;
}

/// Deterministic random source. The engine is std::mt19937_64 (bit-exact per
/// the standard); all distributions are implemented here rather than with
/// std:: distribution objects, whose output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t bits() { return engine_(); }

  /// Uniform double in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller (two draws per value).
  double gaussian() {
    const double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
  }

  /// Uniform integer in [0, n) by rejection sampling (unbiased).
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n + 1) % n;
    std::uint64_t r;
    do {
      r = engine_();
    } while (r > limit);
    return r % n;
  }

  /// In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// Random permutation of 0..n-1.
  std::vector<int> permutation(int n) {
    std::vector<int> p(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
    shuffle(p);
    return p;
  }

  /// k distinct values sampled uniformly from 0..n-1, in draw order.
  std::vector<int> sample_without_replacement(int n, int k) {
    std::vector<int> pool = permutation(n);
    pool.resize(static_cast<std::size_t>(k));
    return pool;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace gccakit
