#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

namespace tsad::stats {

inline double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Variance with denominator n - ddof. Returns 0 when there are too few points.
inline double variance(std::span<const double> x, int ddof = 1) {
  const auto n = static_cast<double>(x.size());
  if (n - ddof <= 0) return 0.0;
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / (n - ddof);
}

inline double stddev(std::span<const double> x, int ddof = 1) { return std::sqrt(variance(x, ddof)); }

/// Linear-interpolation quantile (the "type 7" estimator used by R and numpy).
inline double quantile(std::vector<double> x, double q) {
  if (x.empty()) return 0.0;
  std::sort(x.begin(), x.end());
  const double pos = q * static_cast<double>(x.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, x.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return x[lo] + frac * (x[hi] - x[lo]);
}

inline double quantile(std::span<const double> x, double q) {
  return quantile(std::vector<double>(x.begin(), x.end()), q);
}

inline double median(std::span<const double> x) { return quantile(x, 0.5); }

inline double iqr(std::span<const double> x) {
  std::vector<double> v(x.begin(), x.end());
  std::sort(v.begin(), v.end());
  return quantile(v, 0.75) - quantile(v, 0.25);
}

/// Floor used wherever a scale estimate would otherwise divide by zero.
inline double epsilon_floor(std::span<const double> x) { return 1e-8 * (1.0 + std::abs(mean(x))); }

/// Sample autocorrelation at `lag` (biased estimator, denominator n).
/// Zero-variance input yields 0.
inline double acf(std::span<const double> x, std::size_t lag) {
  const std::size_t n = x.size();
  if (lag >= n) return 0.0;
  const double m = mean(x);
  double den = 0.0;
  for (double v : x) den += (v - m) * (v - m);
  if (den <= 0.0) return 0.0;
  double num = 0.0;
  for (std::size_t t = lag; t < n; ++t) num += (x[t] - m) * (x[t - lag] - m);
  return num / den;
}

inline std::vector<double> diff(std::span<const double> x) {
  std::vector<double> d;
  if (x.size() < 2) return d;
  d.reserve(x.size() - 1);
  for (std::size_t i = 1; i < x.size(); ++i) d.push_back(x[i] - x[i - 1]);
  return d;
}

}  // namespace tsad::stats
