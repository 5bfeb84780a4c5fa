#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tsad/detectors/types.hpp"

namespace tsad {

/// Indices whose score crosses either threshold.
inline std::vector<std::size_t> flagged_indices(std::span<const double> scores, const Thresholds& thresholds) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (scores[i] > thresholds.high || scores[i] < thresholds.low) out.push_back(i);
  return out;
}

/// Flagged indices with consolidation: a run of flagged indices whose
/// consecutive gaps are below `margin` is reported once, at its first index.
inline std::vector<std::size_t> to_changepoints(std::span<const double> scores, const Thresholds& thresholds,
                                                std::size_t margin) {
  const auto flagged = flagged_indices(scores, thresholds);
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < flagged.size(); ++k)
    if (k == 0 || flagged[k] - flagged[k - 1] >= margin) out.push_back(flagged[k]);
  return out;
}

}  // namespace tsad
