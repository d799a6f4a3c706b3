#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace gccakit {

/// Empirical p-quantile: smallest sample value with at least a fraction p of
/// the samples at or below it.
inline double empirical_quantile(std::vector<double> samples, double p) {
  std::sort(samples.begin(), samples.end());
  const auto n = static_cast<std::int64_t>(samples.size());
  std::int64_t idx = static_cast<std::int64_t>(std::ceil(p * static_cast<double>(n))) - 1;
  idx = std::clamp<std::int64_t>(idx, 0, n - 1);
  return samples[static_cast<std::size_t>(idx)];
}

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

/// Shortest round-trip decimal form of a double; stable across reruns of the
/// same build, used for all CSV emission.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

/// Runs fn(i) for i in [0, n) over `threads` workers with a static index
/// partition. Each index must be independent; results written by index are
/// deterministic regardless of thread count.
inline void parallel_for(std::int64_t n, int threads, const std::function<void(std::int64_t)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const int workers = static_cast<int>(std::min<std::int64_t>(threads, n));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::int64_t i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace gccakit
