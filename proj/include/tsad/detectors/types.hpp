#pragma once

#include <array>
#include <limits>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tsad/core/error.hpp"

namespace tsad {

/// Per-point anomaly score aligned with the input series.
using ScoreSeries = std::vector<double>;

enum class DetectorId { outlier = 0, cusum, statsig, bocpd, mkdetector, trendsegmenter };

inline constexpr std::array<DetectorId, 6> kAllDetectors = {
    DetectorId::outlier, DetectorId::cusum,      DetectorId::statsig,
    DetectorId::bocpd,   DetectorId::mkdetector, DetectorId::trendsegmenter,
};
inline constexpr std::size_t kNumDetectors = kAllDetectors.size();

constexpr std::string_view to_string(DetectorId id) noexcept {
  switch (id) {
    case DetectorId::outlier: return "outlier";
    case DetectorId::cusum: return "cusum";
    case DetectorId::statsig: return "statsig";
    case DetectorId::bocpd: return "bocpd";
    case DetectorId::mkdetector: return "mkdetector";
    case DetectorId::trendsegmenter: return "trendsegmenter";
  }
  return "unknown";
}

inline DetectorId detector_from_string(std::string_view s) {
  for (DetectorId id : kAllDetectors)
    if (to_string(id) == s) return id;
  fail(Errc::invalid_argument, "unknown detector '" + std::string(s) + "'");
}

constexpr std::size_t index_of(DetectorId id) noexcept { return static_cast<std::size_t>(id); }

/// Scores above `high` or below `low` are flagged. One-sided detectors use
/// low = -infinity.
struct Thresholds {
  double high = 1.0;
  double low = -1.0;

  static Thresholds symmetric(double high) { return {high, -high}; }
  static Thresholds upper(double high) { return {high, -std::numeric_limits<double>::infinity()}; }

  friend bool operator==(const Thresholds&, const Thresholds&) = default;
};

struct OutlierParams {
  double iqr_mult = 3.0;
  int period = 0;  ///< 0: take the series' own period
  Thresholds thresholds = Thresholds::symmetric(1.0);
  friend bool operator==(const OutlierParams&, const OutlierParams&) = default;
};

struct CusumParams {
  double omega = 0.5;
  int scan_window = 10;
  int historical_window = 30;
  bool remove_seasonality = true;
  Thresholds thresholds = Thresholds::symmetric(5.0);
  friend bool operator==(const CusumParams&, const CusumParams&) = default;
};

struct StatsigParams {
  int n_control = 30;
  int n_test = 10;
  Thresholds thresholds = Thresholds::symmetric(4.0);
  friend bool operator==(const StatsigParams&, const StatsigParams&) = default;
};

struct BocpdParams {
  double changepoint_prior = 0.01;
  /// Prior mean of a segment; NaN means "use the series median".
  double prior_mean = std::numeric_limits<double>::quiet_NaN();
  /// Prior sd of a segment mean, in units of the series' overall sd.
  double prior_scale = 1.0;
  Thresholds thresholds = Thresholds::upper(0.5);
  friend bool operator==(const BocpdParams& a, const BocpdParams& b) {
    const bool both_auto = a.prior_mean != a.prior_mean && b.prior_mean != b.prior_mean;
    return a.changepoint_prior == b.changepoint_prior && (both_auto || a.prior_mean == b.prior_mean) &&
           a.prior_scale == b.prior_scale && a.thresholds == b.thresholds;
  }
};

struct MkParams {
  int window = 30;
  bool remove_seasonality = true;
  Thresholds thresholds = Thresholds::symmetric(0.3);
  friend bool operator==(const MkParams&, const MkParams&) = default;
};

struct TrendSegmenterParams {
  int n_candidates = 25;
  double delta_penalty = 1.0;
  Thresholds thresholds = Thresholds::upper(1.0);
  friend bool operator==(const TrendSegmenterParams&, const TrendSegmenterParams&) = default;
};

/// Alternative index equals the numeric value of the matching DetectorId.
using DetectorParams =
    std::variant<OutlierParams, CusumParams, StatsigParams, BocpdParams, MkParams, TrendSegmenterParams>;

/// A detector together with a complete hyperparameter assignment. The id is
/// derived from the parameter type, so the two cannot disagree.
struct DetectorSpec {
  DetectorParams params;

  [[nodiscard]] DetectorId id() const noexcept { return static_cast<DetectorId>(params.index()); }
  friend bool operator==(const DetectorSpec&, const DetectorSpec&) = default;
};

inline Thresholds thresholds_of(const DetectorParams& params) {
  return std::visit([](const auto& p) { return p.thresholds; }, params);
}

}  // namespace tsad
