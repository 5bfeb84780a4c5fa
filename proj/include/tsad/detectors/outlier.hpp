#pragma once

#include <span>
#include <vector>

#include "tsad/core/decompose.hpp"
#include "tsad/core/stats.hpp"
#include "tsad/core/time_series.hpp"
#include "tsad/detectors/types.hpp"

namespace tsad {

/// residual / (max(IQR, eps) * iqr_mult)
inline ScoreSeries scale_by_iqr(std::span<const double> residual, double iqr_mult, double eps) {
  if (!(iqr_mult > 0.0)) fail(Errc::invalid_argument, "iqr_mult must be positive");
  const double scale = std::max(stats::iqr(residual), eps) * iqr_mult;
  ScoreSeries out(residual.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = residual[i] / scale;
  return out;
}

/// Remainder of the seasonal decomposition, scaled by its interquartile range.
inline ScoreSeries run_outlier(const TimeSeries& series, const OutlierParams& params) {
  const int period = params.period > 0 ? params.period : resolve_period(series);
  const Decomposition d = decompose(series, period);
  return scale_by_iqr(d.residual, params.iqr_mult, stats::epsilon_floor(series.values()));
}

}  // namespace tsad
