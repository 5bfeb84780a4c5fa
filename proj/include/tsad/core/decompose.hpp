#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "tsad/core/error.hpp"
#include "tsad/core/stats.hpp"
#include "tsad/core/time_series.hpp"

namespace tsad {

/// Additive split of a series: value = trend + seasonal + residual.
struct Decomposition {
  std::vector<double> trend;
  std::vector<double> seasonal;
  std::vector<double> residual;
  int period = 0;

  [[nodiscard]] std::vector<double> deseasonalized() const {
    std::vector<double> out(trend.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = trend[i] + residual[i];
    return out;
  }
};

struct DecomposeOptions {
  /// Per-phase medians instead of means for the seasonal profile.
  bool robust = false;
};

namespace detail {

// Least-squares line through (x_i, y_i); returns {intercept, slope}.
inline std::pair<double, double> fit_line(std::span<const double> xs, std::span<const double> ys) {
  const double mx = stats::mean(xs);
  const double my = stats::mean(ys);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  return {my - slope * mx, slope};
}

// Centered moving average over one full period. Even periods use the usual
// 2 x period weighting so the window stays centered. Entries outside
// [half, n - half) are left unset and filled by the caller.
inline std::vector<double> centered_moving_average(std::span<const double> x, int period, std::size_t& half) {
  const std::size_t n = x.size();
  const auto p = static_cast<std::size_t>(period);
  half = p / 2;
  std::vector<double> out(n, 0.0);
  for (std::size_t t = half; t + half < n; ++t) {
    double acc = 0.0;
    if (p % 2 == 1) {
      for (std::size_t k = t - half; k <= t + half; ++k) acc += x[k];
      out[t] = acc / static_cast<double>(p);
    } else {
      for (std::size_t k = t - half + 1; k < t + half; ++k) acc += x[k];
      acc += 0.5 * (x[t - half] + x[t + half]);
      out[t] = acc / static_cast<double>(p);
    }
  }
  return out;
}

}  // namespace detail

/// Two-pass seasonal decomposition: a centered moving-average trend (linearly
/// extrapolated over the half-window at each end), per-phase seasonal profile
/// of the detrended series centered to sum to zero, remainder as residual.
inline Decomposition decompose(std::span<const double> x, int period, DecomposeOptions options = {}) {
  if (period < 2) fail(Errc::no_period, "decomposition needs period >= 2, got " + std::to_string(period));
  const std::size_t n = x.size();
  const auto p = static_cast<std::size_t>(period);
  if (n < 2 * p)
    fail(Errc::series_too_short,
         "decomposition needs at least " + std::to_string(2 * p) + " points, got " + std::to_string(n));

  Decomposition d;
  d.period = period;
  std::size_t half = 0;
  d.trend = detail::centered_moving_average(x, period, half);

  const std::size_t first = half;
  const std::size_t last = n - half;  // exclusive
  const std::size_t span_len = std::min(p, last - first);
  if (half > 0) {
    std::vector<double> xs(span_len);
    std::vector<double> ys(span_len);
    for (std::size_t i = 0; i < span_len; ++i) {
      xs[i] = static_cast<double>(first + i);
      ys[i] = d.trend[first + i];
    }
    auto [a0, b0] = detail::fit_line(xs, ys);
    for (std::size_t t = 0; t < first; ++t) d.trend[t] = a0 + b0 * static_cast<double>(t);
    for (std::size_t i = 0; i < span_len; ++i) {
      xs[i] = static_cast<double>(last - span_len + i);
      ys[i] = d.trend[last - span_len + i];
    }
    auto [a1, b1] = detail::fit_line(xs, ys);
    for (std::size_t t = last; t < n; ++t) d.trend[t] = a1 + b1 * static_cast<double>(t);
  }

  std::vector<std::vector<double>> by_phase(p);
  for (std::size_t t = 0; t < n; ++t) by_phase[t % p].push_back(x[t] - d.trend[t]);
  std::vector<double> profile(p);
  for (std::size_t k = 0; k < p; ++k)
    profile[k] = options.robust ? stats::median(by_phase[k]) : stats::mean(by_phase[k]);
  const double centre = stats::mean(profile);
  for (double& v : profile) v -= centre;

  d.seasonal.resize(n);
  d.residual.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    d.seasonal[t] = profile[t % p];
    d.residual[t] = x[t] - d.trend[t] - d.seasonal[t];
  }
  return d;
}

inline Decomposition decompose(const TimeSeries& series, int period, DecomposeOptions options = {}) {
  return decompose(series.values(), period, options);
}

}  // namespace tsad
