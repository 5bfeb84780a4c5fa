#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tsad/core/error.hpp"

namespace tsad {

inline constexpr std::int64_t kSecondsPerDay = 86400;
inline constexpr std::int64_t kSecondsPerHour = 3600;
/// 2020-01-01T00:00:00Z, the default origin for generated series.
inline constexpr std::int64_t kDefaultEpoch = 1577836800;

/// Univariate series on a uniform grid of integer epoch seconds.
/// Construction validates the grid and rejects non-finite values.
class TimeSeries {
 public:
  TimeSeries(std::vector<std::int64_t> timestamps, std::vector<double> values,
             std::optional<int> period_hint = std::nullopt)
      : timestamps_(std::move(timestamps)), values_(std::move(values)), period_hint_(period_hint) {
    validate();
  }

  /// Daily grid starting at `start`.
  static TimeSeries from_values(std::vector<double> values, std::optional<int> period_hint = std::nullopt,
                                std::int64_t start = kDefaultEpoch, std::int64_t step = kSecondsPerDay) {
    std::vector<std::int64_t> ts(values.size());
    for (std::size_t i = 0; i < ts.size(); ++i) ts[i] = start + static_cast<std::int64_t>(i) * step;
    return TimeSeries(std::move(ts), std::move(values), period_hint);
  }

  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
  [[nodiscard]] std::span<const std::int64_t> timestamps() const noexcept { return timestamps_; }
  [[nodiscard]] std::optional<int> period_hint() const noexcept { return period_hint_; }
  /// Grid spacing in seconds; 0 for a single-point series.
  [[nodiscard]] std::int64_t step() const noexcept {
    return timestamps_.size() > 1 ? timestamps_[1] - timestamps_[0] : 0;
  }
  double operator[](std::size_t i) const { return values_[i]; }

  /// Same grid and period hint, new values.
  [[nodiscard]] TimeSeries with_values(std::vector<double> values) const {
    return TimeSeries(timestamps_, std::move(values), period_hint_);
  }

  [[nodiscard]] TimeSeries with_period_hint(std::optional<int> period) const {
    return TimeSeries(timestamps_, values_, period);
  }

  friend bool operator==(const TimeSeries&, const TimeSeries&) = default;

 private:
  void validate() const {
    if (values_.empty()) fail(Errc::empty_input, "time series has no points");
    if (timestamps_.size() != values_.size())
      fail(Errc::invalid_argument, "timestamps and values differ in length");
    for (std::size_t i = 0; i < values_.size(); ++i)
      if (!std::isfinite(values_[i]))
        fail(Errc::invalid_argument, "non-finite value at index " + std::to_string(i));
    if (timestamps_.size() > 1) {
      const std::int64_t step = timestamps_[1] - timestamps_[0];
      if (step <= 0) fail(Errc::grid_error, "timestamps are not strictly increasing at index 1");
      for (std::size_t i = 2; i < timestamps_.size(); ++i)
        if (timestamps_[i] - timestamps_[i - 1] != step)
          fail(Errc::grid_error, "non-uniform spacing at index " + std::to_string(i));
    }
    if (period_hint_ && *period_hint_ <= 0) fail(Errc::invalid_argument, "period hint must be positive");
  }

  std::vector<std::int64_t> timestamps_;
  std::vector<double> values_;
  std::optional<int> period_hint_;
};

/// Seasonal period in samples: explicit override, then the series hint,
/// then 7 for daily and 24 for hourly grids.
inline int resolve_period(const TimeSeries& series, std::optional<int> override_period = std::nullopt) {
  if (override_period) return *override_period;
  if (series.period_hint()) return *series.period_hint();
  switch (series.step()) {
    case kSecondsPerDay: return 7;
    case kSecondsPerHour: return 24;
    default: break;
  }
  fail(Errc::no_period, "cannot infer a seasonal period from spacing of " + std::to_string(series.step()) +
                            "s; supply one explicitly");
}

enum class AnomalyKind { spike, level_shift, trend_shift, mixed, unknown };

constexpr std::string_view to_string(AnomalyKind kind) noexcept {
  switch (kind) {
    case AnomalyKind::spike: return "spike";
    case AnomalyKind::level_shift: return "level_shift";
    case AnomalyKind::trend_shift: return "trend_shift";
    case AnomalyKind::mixed: return "mixed";
    case AnomalyKind::unknown: return "unknown";
  }
  return "unknown";
}

inline AnomalyKind anomaly_kind_from_string(std::string_view s) {
  for (auto k : {AnomalyKind::spike, AnomalyKind::level_shift, AnomalyKind::trend_shift, AnomalyKind::mixed,
                 AnomalyKind::unknown})
    if (to_string(k) == s) return k;
  fail(Errc::parse_error, "unknown anomaly kind '" + std::string(s) + "'");
}

/// A series together with its ground-truth anomaly indices.
struct LabeledSeries {
  TimeSeries series;
  std::vector<std::size_t> labels;
  AnomalyKind kind = AnomalyKind::unknown;

  LabeledSeries(TimeSeries s, std::vector<std::size_t> l, AnomalyKind k)
      : series(std::move(s)), labels(std::move(l)), kind(k) {
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    if (!labels.empty() && labels.back() >= series.size())
      fail(Errc::invalid_argument, "label index " + std::to_string(labels.back()) + " out of range for length " +
                                       std::to_string(series.size()));
  }

  friend bool operator==(const LabeledSeries&, const LabeledSeries&) = default;
};

}  // namespace tsad
