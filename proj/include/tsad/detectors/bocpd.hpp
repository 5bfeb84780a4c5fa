#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "tsad/core/stats.hpp"
#include "tsad/core/time_series.hpp"
#include "tsad/detectors/types.hpp"

namespace tsad {

/// Row t holds P(r_t = k | x_0..x_t) for k = 0..t+1, where r_t = 0 means a
/// new segment starts at x_t.
struct RunLengthPosterior {
  std::vector<std::vector<double>> rows;
};

struct BocpdResult {
  ScoreSeries scores;
  RunLengthPosterior posterior;
};

namespace detail {

inline double log_normal_pdf(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * var) + d * d / var);
}

inline double log_sum_exp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - m);
  return m + std::log(acc);
}

}  // namespace detail

/// Constant-hazard Bayesian online changepoint detection with a Gaussian
/// unknown-mean segment model (known observation variance, conjugate Normal
/// prior on the mean). The recursion runs entirely in log space.
///
/// The observation variance is the sample variance of the whole series; the
/// prior on a segment mean is N(prior_mean, (prior_scale * sd)^2). A new
/// segment's first point is scored under the prior predictive, so the score
/// P(r_t = 0 | x_0..x_t) rises when x_t is implausible under every running
/// segment.
inline BocpdResult run_bocpd(const TimeSeries& series, const BocpdParams& params, bool keep_posterior = true) {
  const double hazard = params.changepoint_prior;
  if (!(hazard > 0.0 && hazard <= 0.5)) fail(Errc::invalid_argument, "changepoint_prior must lie in (0, 0.5]");
  if (series.size() < 2) fail(Errc::series_too_short, "BOCPD needs at least 2 points");
  if (!(params.prior_scale > 0.0)) fail(Errc::invalid_argument, "prior_scale must be positive");

  const auto x = series.values();
  const std::size_t n = x.size();
  const double eps = stats::epsilon_floor(x);
  const double obs_var = std::max(stats::variance(x), eps * eps);
  const double mu0 = std::isnan(params.prior_mean) ? stats::median(x) : params.prior_mean;
  const double prior_var = params.prior_scale * params.prior_scale * obs_var;
  const double log_h = std::log(hazard);
  const double log_1mh = std::log1p(-hazard);

  // Sufficient statistics per live run: count and sum of its observations.
  std::vector<double> count{0.0};
  std::vector<double> total{0.0};
  std::vector<double> log_post{0.0};

  BocpdResult result;
  result.scores.assign(n, 0.0);
  if (keep_posterior) result.posterior.rows.reserve(n);

  std::vector<double> next;
  const double prior_precision = 1.0 / prior_var;
  for (std::size_t t = 0; t < n; ++t) {
    const double v = x[t];
    const std::size_t live = log_post.size();
    next.assign(live + 1, 0.0);
    const double log_pred_new = detail::log_normal_pdf(v, mu0, prior_var + obs_var);
    for (std::size_t k = 0; k < live; ++k) {
      const double precision = prior_precision + count[k] / obs_var;
      const double post_mean = (mu0 * prior_precision + total[k] / obs_var) / precision;
      const double log_pred = detail::log_normal_pdf(v, post_mean, obs_var + 1.0 / precision);
      next[k + 1] = log_post[k] + log_1mh + log_pred;
    }
    // log_post is normalized, so the changepoint mass is log H + prior predictive.
    next[0] = log_h + log_pred_new;
    const double norm = detail::log_sum_exp(next);
    for (double& lp : next) lp -= norm;
    log_post.swap(next);

    count.insert(count.begin(), 0.0);
    total.insert(total.begin(), 0.0);
    for (std::size_t k = 0; k < count.size(); ++k) {
      count[k] += 1.0;
      total[k] += v;
    }

    result.scores[t] = std::exp(log_post[0]);
    if (keep_posterior) {
      std::vector<double> row(log_post.size());
      std::transform(log_post.begin(), log_post.end(), row.begin(), [](double lp) { return std::exp(lp); });
      result.posterior.rows.push_back(std::move(row));
    }
  }
  return result;
}

inline ScoreSeries bocpd_scores(const TimeSeries& series, const BocpdParams& params) {
  return run_bocpd(series, params, false).scores;
}

}  // namespace tsad
