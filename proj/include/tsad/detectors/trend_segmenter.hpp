#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tsad/core/stats.hpp"
#include "tsad/core/time_series.hpp"
#include "tsad/detectors/types.hpp"

namespace tsad {

/// Continuous piecewise-linear trend with hinges at fixed candidate indices.
struct PiecewiseTrendFit {
  std::vector<std::size_t> candidates;
  /// Slope change at each candidate, in units of series sd per series span.
  std::vector<double> slope_changes;
  std::vector<double> fitted;
  double rss = 0.0;  ///< Residual sum of squares in the original units.
};

/// `count` candidates evenly spaced through the interior of [0, n).
inline std::vector<std::size_t> candidate_positions(std::size_t n, std::size_t count) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < count; ++k) {
    const double pos = static_cast<double>((k + 1) * n) / static_cast<double>(count + 1);
    auto c = static_cast<std::size_t>(std::llround(pos));
    c = std::clamp<std::size_t>(c, 1, n - 2);
    if (out.empty() || c > out.back()) out.push_back(c);
  }
  return out;
}

/// Minimizes 1/2 ||y - X b||^2 + penalty * sum |slope change| on the
/// standardized series, where X = [1, t, (t - c_k)_+] with t scaled to [0, 1].
/// Intercept and base slope are unpenalized. penalty = 0 is solved exactly by
/// least squares; otherwise by cyclic coordinate descent started from the
/// least-squares solution.
inline PiecewiseTrendFit fit_piecewise_trend(std::span<const double> y, std::size_t n_candidates, double penalty) {
  const std::size_t n = y.size();
  if (n_candidates < 1) fail(Errc::invalid_argument, "n_candidates must be >= 1");
  if (penalty < 0.0) fail(Errc::invalid_argument, "delta_penalty must be non-negative");
  if (n < 2 * n_candidates || n < 4)
    fail(Errc::series_too_short, "trend segmentation needs at least " + std::to_string(2 * n_candidates) + " points");

  PiecewiseTrendFit fit;
  fit.candidates = candidate_positions(n, n_candidates);
  const std::size_t k = fit.candidates.size();
  const std::size_t p = k + 2;

  const double mu = stats::mean(y);
  const double sd = std::max(stats::stddev(y, 0), stats::epsilon_floor(y));
  const double span_len = static_cast<double>(n - 1);

  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd target(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / span_len;
    X(i, 0) = 1.0;
    X(i, 1) = t;
    for (std::size_t j = 0; j < k; ++j) X(i, 2 + j) = std::max(0.0, t - static_cast<double>(fit.candidates[j]) / span_len);
    target(i) = (y[i] - mu) / sd;
  }
  const Eigen::MatrixXd gram = X.transpose() * X;
  const Eigen::VectorXd xty = X.transpose() * target;
  Eigen::VectorXd beta = gram.ldlt().solve(xty);

  if (penalty > 0.0) {
    auto objective = [&](const Eigen::VectorXd& b) {
      return 0.5 * (target - X * b).squaredNorm() + penalty * b.tail(k).lpNorm<1>();
    };
    double prev = objective(beta);
    for (int sweep = 0; sweep < 20000; ++sweep) {
      for (std::size_t j = 0; j < p; ++j) {
        const double gjj = gram(j, j);
        if (gjj <= 0.0) continue;
        const double rho = xty(j) - gram.row(j).dot(beta) + gjj * beta(j);
        if (j < 2) {
          beta(j) = rho / gjj;
        } else {
          const double mag = std::max(0.0, std::abs(rho) - penalty);
          beta(j) = std::copysign(mag, rho) / gjj;
        }
      }
      const double cur = objective(beta);
      if (prev - cur <= 1e-13 * (1.0 + std::abs(cur))) break;
      prev = cur;
    }
  }

  fit.slope_changes.resize(k);
  for (std::size_t j = 0; j < k; ++j) fit.slope_changes[j] = beta(2 + j);
  const Eigen::VectorXd fitted = X * beta;
  fit.fitted.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    fit.fitted[i] = mu + sd * fitted(i);
    fit.rss += (y[i] - fit.fitted[i]) * (y[i] - fit.fitted[i]);
  }
  return fit;
}

/// Normalized slope-change magnitude at each candidate, zero elsewhere.
inline ScoreSeries run_trendsegmenter(const TimeSeries& series, const TrendSegmenterParams& params) {
  if (params.n_candidates < 1) fail(Errc::invalid_argument, "n_candidates must be >= 1");
  const auto fit =
      fit_piecewise_trend(series.values(), static_cast<std::size_t>(params.n_candidates), params.delta_penalty);
  std::vector<double> mags(fit.slope_changes.size());
  std::transform(fit.slope_changes.begin(), fit.slope_changes.end(), mags.begin(),
                 [](double d) { return std::abs(d); });
  const double scale = stats::epsilon_floor(series.values()) + stats::median(mags);
  ScoreSeries out(series.size(), 0.0);
  for (std::size_t j = 0; j < fit.candidates.size(); ++j) out[fit.candidates[j]] = mags[j] / scale;
  return out;
}

}  // namespace tsad
