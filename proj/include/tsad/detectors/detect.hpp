#pragma once

#include <cstddef>
#include <vector>

#include <json.hpp>

#include "tsad/core/time_series.hpp"
#include "tsad/detectors/bocpd.hpp"
#include "tsad/detectors/changepoints.hpp"
#include "tsad/detectors/cusum.hpp"
#include "tsad/detectors/mann_kendall.hpp"
#include "tsad/detectors/outlier.hpp"
#include "tsad/detectors/registry.hpp"
#include "tsad/detectors/statsig.hpp"
#include "tsad/detectors/trend_segmenter.hpp"
#include "tsad/detectors/types.hpp"

namespace tsad {

inline ScoreSeries score(const TimeSeries& series, const DetectorSpec& spec) {
  struct Visitor {
    const TimeSeries& s;
    ScoreSeries operator()(const OutlierParams& p) const { return run_outlier(s, p); }
    ScoreSeries operator()(const CusumParams& p) const { return run_cusum(s, p); }
    ScoreSeries operator()(const StatsigParams& p) const { return run_statsig(s, p); }
    ScoreSeries operator()(const BocpdParams& p) const { return bocpd_scores(s, p); }
    ScoreSeries operator()(const MkParams& p) const { return run_mk(s, p); }
    ScoreSeries operator()(const TrendSegmenterParams& p) const { return run_trendsegmenter(s, p); }
  };
  return std::visit(Visitor{series}, spec.params);
}

struct Detection {
  DetectorSpec spec;
  ScoreSeries scores;
  std::vector<std::size_t> changepoints;
};

inline Detection run_detection(const TimeSeries& series, const DetectorSpec& spec, std::size_t margin) {
  Detection d{spec, score(series, spec), {}};
  d.changepoints = to_changepoints(d.scores, thresholds_of(spec.params), margin);
  return d;
}

inline std::vector<std::size_t> detect(const TimeSeries& series, const DetectorSpec& spec, std::size_t margin) {
  return run_detection(series, spec, margin).changepoints;
}

/// {"detector": id, "params": {...}, "changepoints": [...], "scores": [...]}
inline nlohmann::json detection_json(const Detection& d) {
  return {{"detector", std::string(to_string(d.spec.id()))},
          {"params", params_to_json(d.spec.params)},
          {"changepoints", d.changepoints},
          {"scores", d.scores}};
}

inline DetectorSpec spec_from_json(const nlohmann::json& j) {
  const DetectorId id = detector_from_string(j.at("detector").get<std::string>());
  return DetectorSpec{params_from_json(id, j.contains("params") ? j.at("params") : nlohmann::json::object())};
}

}  // namespace tsad
