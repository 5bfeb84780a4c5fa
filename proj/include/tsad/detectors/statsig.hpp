#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "tsad/core/stats.hpp"
#include "tsad/core/time_series.hpp"
#include "tsad/detectors/types.hpp"

namespace tsad {

/// Welch's t statistic of a test sample against a control sample, given
/// their means, sample variances and sizes. Zero mean difference gives 0.
inline double welch_t(double mean_test, double var_test, double n_test, double mean_control, double var_control,
                      double n_control, double eps) {
  const double diff = mean_test - mean_control;
  if (diff == 0.0) return 0.0;
  const double se = std::max(std::sqrt(var_test / n_test + var_control / n_control), eps);
  return diff / se;
}

/// At each t, the test window is the n_test points ending at t and the
/// control window the n_control points before it.
inline ScoreSeries run_statsig(const TimeSeries& series, const StatsigParams& params) {
  if (params.n_control < 2 || params.n_test < 2)
    fail(Errc::invalid_argument, "statsig windows must each hold at least 2 points");
  const auto nc = static_cast<std::size_t>(params.n_control);
  const auto nt = static_cast<std::size_t>(params.n_test);
  const std::size_t n = series.size();
  if (n < nc + nt)
    fail(Errc::series_too_short, "statsig needs at least " + std::to_string(nc + nt) + " points");

  const auto x = series.values();
  const double centre = stats::mean(x);
  const double eps = stats::epsilon_floor(x);
  std::vector<double> sum(n + 1, 0.0);
  std::vector<double> sum_sq(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = x[i] - centre;
    sum[i + 1] = sum[i] + v;
    sum_sq[i + 1] = sum_sq[i] + v * v;
  }
  auto window = [&](std::size_t begin, std::size_t len) {
    const double s1 = sum[begin + len] - sum[begin];
    const double s2 = sum_sq[begin + len] - sum_sq[begin];
    const double m = s1 / static_cast<double>(len);
    const double var = std::max(0.0, (s2 - s1 * m) / static_cast<double>(len - 1));
    return std::pair{m, var};
  };

  ScoreSeries out(n, 0.0);
  for (std::size_t t = nc + nt - 1; t < n; ++t) {
    const std::size_t test_begin = t + 1 - nt;
    const auto [mt, vt] = window(test_begin, nt);
    const auto [mc, vc] = window(test_begin - nc, nc);
    out[t] = welch_t(mt, vt, static_cast<double>(nt), mc, vc, static_cast<double>(nc), eps);
  }
  return out;
}

}  // namespace tsad
