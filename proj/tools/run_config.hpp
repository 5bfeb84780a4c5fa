#pragma once

// The single JSON config document shared by every subcommand. Command-line
// flags override the file; every key is optional.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsad/automl/models.hpp"
#include "tsad/core/io.hpp"
#include "tsad/detectors/detect.hpp"
#include "tsad/simulator/base_series.hpp"
#include "tsad/simulator/injection.hpp"

namespace tsad::cli {

inline constexpr std::size_t kCorpusCopies = 24;    // 18 bases x 24 = 432 series
inline constexpr std::size_t kBenchmarkCopies = 12;  // reduced scale, 216 series

struct RunConfig {
  std::uint64_t seed = 1;
  int jobs = 0;
  std::size_t margin = 5;
  double beta = 1.0;
  int budget = 40;
  std::optional<std::size_t> copies;
  double eval_fraction = 0.2;
  InjectionConfig injection;
  std::vector<BaseSeriesConfig> bases;  // empty: the 18-series preset
  std::vector<AnomalyKind> kinds{AnomalyKind::spike, AnomalyKind::level_shift, AnomalyKind::trend_shift};
  ForestParams forest;
  TunerParams tuner;
  std::optional<nlohmann::json> detector;  // {"detector": name, "params": {...}}

  [[nodiscard]] EvalConfig eval() const { return {margin, beta}; }
};

namespace config_detail {

template <class T>
void take(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline void only_keys(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) fail(Errc::invalid_config, where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) fail(Errc::invalid_config, "unknown key '" + it.key() + "' in " + where);
}

}  // namespace config_detail

inline void validate(const RunConfig& c) {
  if (c.margin < 1) fail(Errc::invalid_config, "margin must be >= 1");
  if (!(c.beta > 0)) fail(Errc::invalid_config, "beta must be positive");
  if (c.budget < 1) fail(Errc::invalid_config, "budget must be >= 1");
  if (c.copies && *c.copies < 1) fail(Errc::invalid_config, "copies must be >= 1");
  if (!(c.eval_fraction > 0 && c.eval_fraction < 1)) fail(Errc::invalid_config, "eval_fraction must lie in (0, 1)");
  if (c.kinds.empty()) fail(Errc::invalid_config, "kinds must not be empty");
  for (auto k : c.kinds)
    if (k != AnomalyKind::spike && k != AnomalyKind::level_shift && k != AnomalyKind::trend_shift)
      fail(Errc::invalid_config, "kinds may only hold spike, level_shift and trend_shift");
  c.injection.validate();
}

inline RunConfig parse_config(const nlohmann::json& j) {
  using config_detail::take;
  RunConfig c;
  config_detail::only_keys(j,
                           {"seed", "jobs", "margin", "beta", "budget", "copies", "eval_fraction", "injection", "bases",
                            "kinds", "forest", "tuner", "detector"},
                           "config");
  try {
    take(j, "seed", c.seed);
    take(j, "jobs", c.jobs);
    take(j, "margin", c.margin);
    take(j, "beta", c.beta);
    take(j, "budget", c.budget);
    if (j.contains("copies")) c.copies = j.at("copies").get<std::size_t>();
    take(j, "eval_fraction", c.eval_fraction);
    if (j.contains("injection")) c.injection = injection_from_json(j.at("injection"));
    if (j.contains("bases"))
      for (const auto& b : j.at("bases")) c.bases.push_back(base_config_from_json(b));
    if (j.contains("kinds")) {
      c.kinds.clear();
      for (const auto& k : j.at("kinds")) c.kinds.push_back(anomaly_kind_from_string(k.get<std::string>()));
    }
    if (j.contains("forest")) {
      const auto& f = j.at("forest");
      config_detail::only_keys(f, {"n_trees", "max_depth", "min_leaf", "max_features", "bootstrap"}, "forest");
      take(f, "n_trees", c.forest.n_trees);
      take(f, "max_depth", c.forest.max_depth);
      take(f, "min_leaf", c.forest.min_leaf);
      take(f, "max_features", c.forest.max_features);
      take(f, "bootstrap", c.forest.bootstrap);
    }
    if (j.contains("tuner")) {
      const auto& t = j.at("tuner");
      config_detail::only_keys(t, {"hidden", "epochs", "learning_rate", "l2", "row_margin"}, "tuner");
      take(t, "hidden", c.tuner.hidden);
      take(t, "epochs", c.tuner.epochs);
      take(t, "learning_rate", c.tuner.learning_rate);
      take(t, "l2", c.tuner.l2);
      take(t, "row_margin", c.tuner.row_margin);
    }
    if (j.contains("detector")) {
      c.detector = j.at("detector");
      (void)spec_from_json(*c.detector);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::invalid_config, std::string("config: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::invalid_config) throw;
    fail(Errc::invalid_config, std::string("config: ") + e.what());
  }
  validate(c);
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = io::read_json(path);
  } catch (const Error& e) {
    fail(Errc::invalid_config, std::string("cannot load config: ") + e.what());
  }
  return parse_config(j);
}

}  // namespace tsad::cli
