#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsad/detectors/types.hpp"
#include "tsad/util/random.hpp"

namespace tsad {

/// Bumped whenever a range, default, or parameter order below changes.
inline constexpr int kRegistryVersion = 1;

enum class ParamKind { integer, real, log_real, boolean };

constexpr std::string_view to_string(ParamKind k) noexcept {
  switch (k) {
    case ParamKind::integer: return "integer";
    case ParamKind::real: return "real";
    case ParamKind::log_real: return "log_real";
    case ParamKind::boolean: return "boolean";
  }
  return "real";
}

struct ParamSpec {
  std::string name;
  ParamKind kind;
  double lo;
  double hi;
  double default_value;

  [[nodiscard]] bool categorical() const noexcept { return kind == ParamKind::boolean; }

  [[nodiscard]] double clamp(double v) const {
    if (!std::isfinite(v)) v = default_value;
    v = std::clamp(v, lo, hi);
    if (kind == ParamKind::integer) v = std::clamp(std::round(v), lo, hi);
    if (kind == ParamKind::boolean) v = v >= 0.5 ? 1.0 : 0.0;
    return v;
  }

  [[nodiscard]] double sample(Rng& rng) const {
    switch (kind) {
      case ParamKind::integer:
        return static_cast<double>(std::uniform_int_distribution<long long>(static_cast<long long>(lo),
                                                                            static_cast<long long>(hi))(rng));
      case ParamKind::real: return std::uniform_real_distribution<double>(lo, hi)(rng);
      case ParamKind::log_real:
        return std::exp(std::uniform_real_distribution<double>(std::log(lo), std::log(hi))(rng));
      case ParamKind::boolean: return std::bernoulli_distribution(0.5)(rng) ? 1.0 : 0.0;
    }
    return default_value;
  }
};

/// Hyperparameter search space per detector. Every detector's last entry is
/// its upper score threshold; two-sided detectors mirror it as low = -high.
inline const std::vector<ParamSpec>& search_space(DetectorId id) {
  static const std::vector<ParamSpec> outlier{
      {"iqr_mult", ParamKind::real, 1.0, 10.0, 3.0},
      {"threshold", ParamKind::real, 0.1, 2.0, 1.0},
  };
  static const std::vector<ParamSpec> cusum{
      {"omega", ParamKind::real, 0.0, 3.0, 0.5},
      {"scan_window", ParamKind::integer, 5, 50, 10},
      {"historical_window", ParamKind::integer, 10, 200, 30},
      {"remove_seasonality", ParamKind::boolean, 0, 1, 1},
      {"threshold", ParamKind::real, 0.1, 20.0, 5.0},
  };
  static const std::vector<ParamSpec> statsig{
      {"n_control", ParamKind::integer, 10, 200, 30},
      {"n_test", ParamKind::integer, 5, 50, 10},
      {"threshold", ParamKind::real, 0.1, 20.0, 4.0},
  };
  static const std::vector<ParamSpec> bocpd{
      {"changepoint_prior", ParamKind::log_real, 1e-3, 1e-1, 1e-2},
      {"threshold", ParamKind::real, 0.05, 0.95, 0.5},
  };
  static const std::vector<ParamSpec> mk{
      {"window", ParamKind::integer, 10, 100, 30},
      {"remove_seasonality", ParamKind::boolean, 0, 1, 1},
      {"threshold", ParamKind::real, 0.05, 2.0, 0.3},
  };
  static const std::vector<ParamSpec> trend{
      {"n_candidates", ParamKind::integer, 5, 25, 25},
      {"delta_penalty", ParamKind::real, 0.0, 10.0, 1.0},
      {"threshold", ParamKind::real, 0.1, 20.0, 1.0},
  };
  switch (id) {
    case DetectorId::outlier: return outlier;
    case DetectorId::cusum: return cusum;
    case DetectorId::statsig: return statsig;
    case DetectorId::bocpd: return bocpd;
    case DetectorId::mkdetector: return mk;
    case DetectorId::trendsegmenter: return trend;
  }
  return outlier;
}

/// Builds typed parameters from registry-ordered values (clamped first).
inline DetectorParams params_from_values(DetectorId id, std::span<const double> raw) {
  const auto& space = search_space(id);
  if (raw.size() != space.size())
    fail(Errc::invalid_argument, std::string(to_string(id)) + " expects " + std::to_string(space.size()) +
                                     " hyperparameters, got " + std::to_string(raw.size()));
  std::vector<double> v(raw.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = space[i].clamp(raw[i]);
  auto as_int = [](double d) { return static_cast<int>(std::lround(d)); };
  switch (id) {
    case DetectorId::outlier: {
      OutlierParams p;
      p.iqr_mult = v[0];
      p.thresholds = Thresholds::symmetric(v[1]);
      return p;
    }
    case DetectorId::cusum: {
      CusumParams p;
      p.omega = v[0];
      p.scan_window = as_int(v[1]);
      p.historical_window = as_int(v[2]);
      p.remove_seasonality = v[3] >= 0.5;
      p.thresholds = Thresholds::symmetric(v[4]);
      return p;
    }
    case DetectorId::statsig: {
      StatsigParams p;
      p.n_control = as_int(v[0]);
      p.n_test = as_int(v[1]);
      p.thresholds = Thresholds::symmetric(v[2]);
      return p;
    }
    case DetectorId::bocpd: {
      BocpdParams p;
      p.changepoint_prior = v[0];
      p.thresholds = Thresholds::upper(v[1]);
      return p;
    }
    case DetectorId::mkdetector: {
      MkParams p;
      p.window = as_int(v[0]);
      p.remove_seasonality = v[1] >= 0.5;
      p.thresholds = Thresholds::symmetric(v[2]);
      return p;
    }
    case DetectorId::trendsegmenter: {
      TrendSegmenterParams p;
      p.n_candidates = as_int(v[0]);
      p.delta_penalty = v[1];
      p.thresholds = Thresholds::upper(v[2]);
      return p;
    }
  }
  return OutlierParams{};
}

/// Registry-ordered values of the searchable hyperparameters.
inline std::vector<double> params_to_values(const DetectorParams& params) {
  struct Visitor {
    std::vector<double> operator()(const OutlierParams& p) const { return {p.iqr_mult, p.thresholds.high}; }
    std::vector<double> operator()(const CusumParams& p) const {
      return {p.omega, double(p.scan_window), double(p.historical_window), p.remove_seasonality ? 1.0 : 0.0,
              p.thresholds.high};
    }
    std::vector<double> operator()(const StatsigParams& p) const {
      return {double(p.n_control), double(p.n_test), p.thresholds.high};
    }
    std::vector<double> operator()(const BocpdParams& p) const { return {p.changepoint_prior, p.thresholds.high}; }
    std::vector<double> operator()(const MkParams& p) const {
      return {double(p.window), p.remove_seasonality ? 1.0 : 0.0, p.thresholds.high};
    }
    std::vector<double> operator()(const TrendSegmenterParams& p) const {
      return {double(p.n_candidates), p.delta_penalty, p.thresholds.high};
    }
  };
  return std::visit(Visitor{}, params);
}

inline DetectorParams default_params(DetectorId id) {
  std::vector<double> v;
  for (const auto& s : search_space(id)) v.push_back(s.default_value);
  return params_from_values(id, v);
}

/// One uniform draw from the detector's space (log-uniform for log_real).
inline DetectorParams sample_params(DetectorId id, Rng& rng) {
  std::vector<double> v;
  for (const auto& s : search_space(id)) v.push_back(s.sample(rng));
  return params_from_values(id, v);
}

inline bool within_space(const DetectorParams& params) {
  const auto id = static_cast<DetectorId>(params.index());
  const auto v = params_to_values(params);
  const auto& space = search_space(id);
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!(v[i] >= space[i].lo && v[i] <= space[i].hi)) return false;
  return true;
}

inline nlohmann::json params_to_json(const DetectorParams& params) {
  const auto id = static_cast<DetectorId>(params.index());
  const auto v = params_to_values(params);
  const auto& space = search_space(id);
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t i = 0; i < v.size(); ++i) {
    switch (space[i].kind) {
      case ParamKind::integer: j[space[i].name] = static_cast<long long>(std::llround(v[i])); break;
      case ParamKind::boolean: j[space[i].name] = v[i] >= 0.5; break;
      default: j[space[i].name] = v[i];
    }
  }
  return j;
}

/// Missing keys fall back to registry defaults.
inline DetectorParams params_from_json(DetectorId id, const nlohmann::json& j) {
  const auto& space = search_space(id);
  std::vector<double> v;
  for (const auto& s : space) {
    if (j.is_object() && j.contains(s.name)) {
      const auto& e = j.at(s.name);
      if (e.is_boolean()) v.push_back(e.get<bool>() ? 1.0 : 0.0);
      else if (e.is_number()) v.push_back(e.get<double>());
      else fail(Errc::parse_error, "hyperparameter '" + s.name + "' must be numeric or boolean");
    } else {
      v.push_back(s.default_value);
    }
  }
  return params_from_values(id, v);
}

inline nlohmann::json registry_json() {
  nlohmann::json j;
  j["registry_version"] = kRegistryVersion;
  for (DetectorId id : kAllDetectors) {
    nlohmann::json params = nlohmann::json::array();
    for (const auto& s : search_space(id))
      params.push_back({{"name", s.name},
                        {"kind", std::string(to_string(s.kind))},
                        {"lo", s.lo},
                        {"hi", s.hi},
                        {"default", s.default_value}});
    j["detectors"][std::string(to_string(id))] = params;
  }
  return j;
}

}  // namespace tsad
