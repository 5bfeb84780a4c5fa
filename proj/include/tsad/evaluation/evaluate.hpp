#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <iomanip>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tsad/core/error.hpp"
#include "tsad/core/time_series.hpp"

namespace tsad {

struct EvalConfig {
  std::size_t margin = 5;
  double beta = 1.0;
};

struct MatchResult {
  std::vector<std::pair<std::size_t, std::size_t>> tp;  ///< (truth, detection)
  std::vector<std::size_t> fp;
  std::vector<std::size_t> fn;
};

struct EvaluationResult {
  MatchResult match;
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
  double mean_delay = 0.0;  ///< over matched pairs detected at or after the truth
  std::size_t n_truth = 0;  ///< |Gamma| including the t = 0 convention point
  std::size_t n_detected = 0;
};

namespace detail {
inline std::vector<std::size_t> with_origin(std::span<const std::size_t> xs) {
  std::vector<std::size_t> out(xs.begin(), xs.end());
  out.push_back(0);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}
}  // namespace detail

/// One-to-one matching of truths to detections within `margin`. Both inputs
/// must be sorted and free of duplicates. Walking both lists and pairing the
/// earliest admissible partners yields a maximum matching, since every
/// truth's admissible window is an interval and the windows are ordered.
inline MatchResult match_sorted(std::span<const std::size_t> truth, std::span<const std::size_t> detected,
                                std::size_t margin) {
  MatchResult r;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < truth.size() && j < detected.size()) {
    const std::size_t tau = truth[i];
    const std::size_t x = detected[j];
    if ((tau > x ? tau - x : x - tau) <= margin) {
      r.tp.emplace_back(tau, x);
      ++i;
      ++j;
    } else if (x < tau) {
      r.fp.push_back(x);
      ++j;
    } else {
      r.fn.push_back(tau);
      ++i;
    }
  }
  for (; i < truth.size(); ++i) r.fn.push_back(truth[i]);
  for (; j < detected.size(); ++j) r.fp.push_back(detected[j]);
  return r;
}

/// Matching with t = 0 added to both sets as a trivial changepoint.
inline MatchResult match(std::span<const std::size_t> truth, std::span<const std::size_t> detected,
                         std::size_t margin) {
  const auto g = detail::with_origin(truth);
  const auto c = detail::with_origin(detected);
  return match_sorted(g, c, margin);
}

/// (1 + b^2) P R / (b^2 P + R), with 0 when P = R = 0.
inline double f_beta(double precision, double recall, double beta = 1.0) {
  const double b2 = beta * beta;
  const double den = b2 * precision + recall;
  if (den <= 0.0) return 0.0;
  return (1.0 + b2) * precision * recall / den;
}

inline EvaluationResult evaluate(std::span<const std::size_t> truth, std::span<const std::size_t> detected,
                                 const EvalConfig& config = {}) {
  if (config.margin < 1) fail(Errc::invalid_argument, "margin must be >= 1");
  if (!(config.beta > 0.0)) fail(Errc::invalid_argument, "beta must be positive");
  const auto g = detail::with_origin(truth);
  const auto c = detail::with_origin(detected);
  EvaluationResult r;
  r.match = match_sorted(g, c, config.margin);
  r.n_truth = g.size();
  r.n_detected = c.size();
  const auto tp = static_cast<double>(r.match.tp.size());
  r.precision = tp / static_cast<double>(c.size());
  r.recall = tp / static_cast<double>(g.size());
  r.f_score = f_beta(r.precision, r.recall, config.beta);
  double delay = 0.0;
  std::size_t late = 0;
  for (auto [tau, x] : r.match.tp)
    if (x >= tau) {
      delay += static_cast<double>(x - tau);
      ++late;
    }
  r.mean_delay = late > 0 ? delay / static_cast<double>(late) : 0.0;
  return r;
}

inline EvaluationResult evaluate(const LabeledSeries& labeled, std::span<const std::size_t> detected,
                                 const EvalConfig& config = {}) {
  return evaluate(labeled.labels, detected, config);
}

inline nlohmann::json evaluation_json(const EvaluationResult& r, const EvalConfig& config) {
  nlohmann::json tp = nlohmann::json::array();
  for (auto [tau, x] : r.match.tp) tp.push_back({tau, x});
  return {{"precision", r.precision}, {"recall", r.recall},  {"f_score", r.f_score},
          {"mean_delay", r.mean_delay}, {"tp", tp},          {"fp", r.match.fp},
          {"fn", r.match.fn},           {"margin", config.margin}, {"beta", config.beta}};
}

struct ReportRow {
  std::string series_id;
  std::string detector;
  EvaluationResult result;
};

/// Aggregate CSV: series_id,detector,P,R,F,tp,fp,fn,mean_delay with counts
/// for tp, fp and fn.
inline void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
  out << "series_id,detector,P,R,F,tp,fp,fn,mean_delay\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& r : rows) {
    const auto& e = r.result;
    out << r.series_id << ',' << r.detector << ',' << e.precision << ',' << e.recall << ',' << e.f_score << ','
        << e.match.tp.size() << ',' << e.match.fp.size() << ',' << e.match.fn.size() << ',' << e.mean_delay << '\n';
  }
}

}  // namespace tsad
