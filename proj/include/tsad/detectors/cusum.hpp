#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "tsad/core/decompose.hpp"
#include "tsad/core/stats.hpp"
#include "tsad/core/time_series.hpp"
#include "tsad/detectors/types.hpp"

namespace tsad {

/// One-sided cumulative sum S_t = max(0, S_{t-1} + z_t - omega), S_{-1} = 0.
inline std::vector<double> cusum_recursion(std::span<const double> z, double omega) {
  std::vector<double> s(z.size());
  double acc = 0.0;
  for (std::size_t t = 0; t < z.size(); ++t) {
    acc = std::max(0.0, acc + z[t] - omega);
    s[t] = acc;
  }
  return s;
}

/// Standardizes each point against the `historical_window` points that
/// precede its scan span [t - scan_window + 1, t]. Points too early to have a
/// full baseline use the first `historical_window` points.
inline std::vector<double> cusum_z_scores(std::span<const double> x, std::size_t scan_window,
                                          std::size_t historical_window, double eps) {
  const std::size_t n = x.size();
  const double centre = stats::mean(x);
  std::vector<double> sum(n + 1, 0.0);
  std::vector<double> sum_sq(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = x[i] - centre;
    sum[i + 1] = sum[i] + v;
    sum_sq[i + 1] = sum_sq[i] + v * v;
  }
  std::vector<double> z(n);
  for (std::size_t t = 0; t < n; ++t) {
    std::size_t end = historical_window;
    if (t + 1 >= scan_window + historical_window) end = t + 1 - scan_window;
    const std::size_t begin = end - historical_window;
    const auto m = static_cast<double>(historical_window);
    const double s1 = sum[end] - sum[begin];
    const double s2 = sum_sq[end] - sum_sq[begin];
    const double mu = s1 / m;
    const double var = std::max(0.0, (s2 - s1 * mu) / (m - 1.0));
    const double sd = std::max(std::sqrt(var), eps);
    z[t] = ((x[t] - centre) - mu) / sd;
  }
  return z;
}

/// Two-sided CUSUM reported as S+ - S-, where S+ accumulates z and S-
/// accumulates -z.
inline ScoreSeries run_cusum(const TimeSeries& series, const CusumParams& params) {
  if (params.historical_window < 2) fail(Errc::invalid_argument, "historical_window must be >= 2");
  if (params.scan_window < 1) fail(Errc::invalid_argument, "scan_window must be >= 1");
  if (params.omega < 0.0) fail(Errc::invalid_argument, "omega must be non-negative");
  const auto hist = static_cast<std::size_t>(params.historical_window);
  if (series.size() <= hist)
    fail(Errc::series_too_short, "CUSUM needs more than " + std::to_string(hist) + " points");

  std::vector<double> x(series.values().begin(), series.values().end());
  if (params.remove_seasonality) x = decompose(series, resolve_period(series)).deseasonalized();

  const auto z = cusum_z_scores(x, static_cast<std::size_t>(params.scan_window), hist,
                                stats::epsilon_floor(series.values()));
  std::vector<double> neg(z.size());
  std::transform(z.begin(), z.end(), neg.begin(), [](double v) { return -v; });
  const auto up = cusum_recursion(z, params.omega);
  const auto down = cusum_recursion(neg, params.omega);
  ScoreSeries out(z.size());
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = up[t] - down[t];
  return out;
}

}  // namespace tsad
