#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "tsad/core/decompose.hpp"
#include "tsad/core/time_series.hpp"
#include "tsad/detectors/types.hpp"

namespace tsad {

namespace detail {
constexpr int sign_of(double v) noexcept { return (v > 0.0) - (v < 0.0); }
}  // namespace detail

/// Mann-Kendall S over every trailing window of length `window`, updated
/// incrementally in O(window) per step. Entry t is S of x[t-window+1 .. t];
/// entries before the first full window are 0.
inline std::vector<long long> rolling_mann_kendall_s(std::span<const double> x, std::size_t window) {
  const std::size_t n = x.size();
  std::vector<long long> s(n, 0);
  if (window < 2 || n < window) return s;
  long long acc = 0;
  for (std::size_t i = 0; i < window; ++i)
    for (std::size_t j = i + 1; j < window; ++j) acc += detail::sign_of(x[j] - x[i]);
  s[window - 1] = acc;
  for (std::size_t t = window; t < n; ++t) {
    const std::size_t dropped = t - window;
    for (std::size_t j = dropped + 1; j < t; ++j) acc -= detail::sign_of(x[j] - x[dropped]);
    for (std::size_t i = dropped + 1; i < t; ++i) acc += detail::sign_of(x[t] - x[i]);
    s[t] = acc;
  }
  return s;
}

/// Normal approximation of S with variance n(n-1)(2n+5)/18 and the usual
/// continuity correction.
inline double mann_kendall_z(long long s, std::size_t n) {
  const auto nn = static_cast<double>(n);
  const double var = nn * (nn - 1.0) * (2.0 * nn + 5.0) / 18.0;
  if (s == 0 || var <= 0.0) return 0.0;
  const double corrected = s > 0 ? static_cast<double>(s) - 1.0 : static_cast<double>(s) + 1.0;
  return corrected / std::sqrt(var);
}

/// Score is the step change Z_t - Z_{t-1} of the trailing-window trend
/// statistic; zero until two full windows of Z exist.
inline ScoreSeries run_mk(const TimeSeries& series, const MkParams& params) {
  if (params.window < 4) fail(Errc::invalid_argument, "MK window must be >= 4");
  const auto w = static_cast<std::size_t>(params.window);
  if (series.size() < w) fail(Errc::series_too_short, "MK needs at least " + std::to_string(w) + " points");
  std::vector<double> x(series.values().begin(), series.values().end());
  if (params.remove_seasonality) {
    const Decomposition d = decompose(series, resolve_period(series));
    for (std::size_t i = 0; i < x.size(); ++i) x[i] -= d.seasonal[i];
  }
  const auto s = rolling_mann_kendall_s(x, w);
  ScoreSeries out(x.size(), 0.0);
  for (std::size_t t = w; t < x.size(); ++t) out[t] = mann_kendall_z(s[t], w) - mann_kendall_z(s[t - 1], w);
  return out;
}

}  // namespace tsad
