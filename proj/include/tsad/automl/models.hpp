#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "tsad/automl/random_forest.hpp"
#include "tsad/automl/training.hpp"
#include "tsad/automl/tuner.hpp"
#include "tsad/core/error.hpp"
#include "tsad/detectors/registry.hpp"
#include "tsad/features/extract.hpp"

namespace tsad {

inline constexpr std::size_t kMinTrainingRows = 20;

/// Class probabilities over the six detectors, indexed by DetectorId.
struct SelectorModel {
  RandomForest forest;
  int schema_version = kFeatureSchemaVersion;

  [[nodiscard]] std::vector<double> probabilities(const FeatureVector& f) const {
    check_schema(f);
    return forest.predict_proba(f.span());
  }
  [[nodiscard]] DetectorId predict(const FeatureVector& f) const {
    const auto p = probabilities(f);
    return kAllDetectors[static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin())];
  }
  void check_schema(const FeatureVector& f) const {
    if (f.schema_version != schema_version)
      fail(Errc::schema_mismatch, "features use schema " + std::to_string(f.schema_version) +
                                      " but the selector was trained on schema " + std::to_string(schema_version));
  }
};

/// Rows are put in a canonical order first so the trained forest does not
/// depend on how the table was ordered.
inline SelectorModel train_selector(const std::vector<TrainingExample>& table, const ForestParams& params) {
  if (table.size() < kMinTrainingRows)
    fail(Errc::insufficient_data, "selector needs at least " + std::to_string(kMinTrainingRows) + " rows, got " +
                                      std::to_string(table.size()));
  std::vector<std::pair<std::array<double, kNumFeatures>, int>> rows;
  for (const auto& ex : table) rows.emplace_back(ex.features.values, static_cast<int>(index_of(ex.best_detector)));
  std::sort(rows.begin(), rows.end());
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (const auto& [f, label] : rows) {
    x.emplace_back(f.begin(), f.end());
    y.push_back(label);
  }
  if (std::all_of(y.begin(), y.end(), [&](int v) { return v == y.front(); }))
    fail(Errc::single_class, "selector needs at least 2 distinct labels; all rows are " +
                                 std::string(to_string(kAllDetectors[static_cast<std::size_t>(y.front())])));
  SelectorModel m;
  m.forest.fit(x, y, static_cast<int>(kNumDetectors), params);
  return m;
}

/// Fits on the rows where the detector is competitive (best F within
/// row_margin of the row's top F, and above 0): the tuner only matters when
/// the selector picks its detector. With fewer than 20 such rows the 20 rows
/// closest to their top F are used.
inline TunerModel train_tuner(const std::vector<TrainingExample>& table, DetectorId id, const TunerParams& params) {
  if (table.size() < kMinTrainingRows)
    fail(Errc::insufficient_data, "tuner for " + std::string(to_string(id)) + " needs at least " +
                                      std::to_string(kMinTrainingRows) + " rows, got " + std::to_string(table.size()));
  const std::size_t d = index_of(id);
  std::vector<std::pair<double, const TrainingExample*>> gaps;
  for (const auto& ex : table)
    gaps.emplace_back(*std::max_element(ex.best_f.begin(), ex.best_f.end()) - ex.best_f[d], &ex);
  std::vector<const TrainingExample*> use;
  for (const auto& [gap, ex] : gaps)
    if (ex->best_f[d] > 0.0 && (params.row_margin < 0.0 || gap <= params.row_margin)) use.push_back(ex);
  if (use.size() < kMinTrainingRows) {
    std::stable_sort(gaps.begin(), gaps.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    use.clear();
    for (std::size_t i = 0; i < kMinTrainingRows; ++i) use.push_back(gaps[i].second);
  }
  // Each row contributes all of its tied-best draws with total weight 1.
  std::vector<std::tuple<std::array<double, kNumFeatures>, std::vector<double>, double>> rows;
  for (const auto* ex : use) {
    const auto& tied = ex->tied_params[d];
    if (tied.empty()) {
      rows.emplace_back(ex->features.values, params_to_values(ex->best_params[d]), 1.0);
      continue;
    }
    for (const auto& p : tied)
      rows.emplace_back(ex->features.values, params_to_values(p), 1.0 / static_cast<double>(tied.size()));
  }
  std::sort(rows.begin(), rows.end());
  std::vector<std::vector<double>> x;
  std::vector<std::vector<double>> t;
  std::vector<double> w;
  for (const auto& [f, v, weight] : rows) {
    x.emplace_back(f.begin(), f.end());
    t.push_back(v);
    w.push_back(weight);
  }
  TunerModel m(id, kNumFeatures, params);
  m.fit(x, t, w);
  return m;
}

struct ModelBundle {
  SelectorModel selector;
  std::vector<TunerModel> tuners;  ///< indexed by DetectorId
  nlohmann::json meta = nlohmann::json::object();

  [[nodiscard]] const TunerModel& tuner(DetectorId id) const {
    for (const auto& t : tuners)
      if (t.detector() == id) return t;
    fail(Errc::invalid_argument, "bundle has no tuner for " + std::string(to_string(id)));
  }
};

struct TrainConfig {
  ForestParams forest;
  TunerParams tuner;
};

inline ModelBundle train_models(const std::vector<TrainingExample>& table, const TrainConfig& config) {
  ModelBundle b;
  b.selector = train_selector(table, config.forest);
  for (DetectorId id : kAllDetectors) {
    TunerParams p = config.tuner;
    p.seed = derive_seed(config.tuner.seed, {static_cast<std::uint64_t>(index_of(id))});
    b.tuners.push_back(train_tuner(table, id, p));
  }
  b.meta["n_rows"] = table.size();
  return b;
}

inline DetectorSpec recommend(const FeatureVector& features, const SelectorModel& selector,
                              const std::vector<TunerModel>& tuners) {
  const DetectorId id = selector.predict(features);
  for (const auto& t : tuners)
    if (t.detector() == id) return DetectorSpec{t.predict(features.span())};
  fail(Errc::invalid_argument, "no tuner for " + std::string(to_string(id)));
}

inline DetectorSpec recommend(const TimeSeries& series, const SelectorModel& selector,
                              const std::vector<TunerModel>& tuners) {
  return recommend(extract(series), selector, tuners);
}

inline DetectorSpec recommend(const TimeSeries& series, const ModelBundle& bundle) {
  return recommend(series, bundle.selector, bundle.tuners);
}

namespace bundle_detail {

inline nlohmann::json read_strict(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) fail(Errc::io_error, "cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::corrupt_file, p.string() + ": " + e.what());
  }
}

inline void write(const std::filesystem::path& p, const nlohmann::json& j) {
  std::ofstream out(p);
  if (!out) fail(Errc::io_error, "cannot write " + p.string());
  out << j.dump(1) << "\n";
  if (!out) fail(Errc::io_error, "write failed for " + p.string());
}

inline void expect_version(const nlohmann::json& j, const char* key, int expected, const std::string& file) {
  if (!j.contains(key) || !j.at(key).is_number_integer()) fail(Errc::corrupt_file, file + " lacks '" + key + "'");
  const int got = j.at(key).get<int>();
  if (got != expected)
    fail(Errc::version_mismatch, file + ": " + key + " is " + std::to_string(got) + " but this build expects " +
                                     std::to_string(expected));
}

}  // namespace bundle_detail

/// selector.json, tuner_<detector>.json, registry.json and meta.json.
inline void save_models(const std::filesystem::path& dir, const ModelBundle& bundle) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(Errc::io_error, "cannot create " + dir.string() + ": " + ec.message());
  nlohmann::json meta = bundle.meta;
  meta["feature_schema_version"] = kFeatureSchemaVersion;
  meta["registry_version"] = kRegistryVersion;
  nlohmann::json names = nlohmann::json::array();
  for (auto n : kFeatureNames) names.push_back(std::string(n));
  meta["feature_names"] = names;
  nlohmann::json sel = bundle.selector.forest.to_json();
  sel["feature_schema_version"] = bundle.selector.schema_version;
  bundle_detail::write(dir / "selector.json", sel);
  for (const auto& t : bundle.tuners) {
    nlohmann::json tj = t.to_json();
    tj["registry_version"] = kRegistryVersion;
    bundle_detail::write(dir / ("tuner_" + std::string(to_string(t.detector())) + ".json"), tj);
  }
  bundle_detail::write(dir / "registry.json", registry_json());
  bundle_detail::write(dir / "meta.json", meta);
}

inline ModelBundle load_models(const std::filesystem::path& dir) {
  ModelBundle b;
  b.meta = bundle_detail::read_strict(dir / "meta.json");
  bundle_detail::expect_version(b.meta, "feature_schema_version", kFeatureSchemaVersion, "meta.json");
  bundle_detail::expect_version(b.meta, "registry_version", kRegistryVersion, "meta.json");
  const auto reg = bundle_detail::read_strict(dir / "registry.json");
  bundle_detail::expect_version(reg, "registry_version", kRegistryVersion, "registry.json");
  if (reg != registry_json())
    fail(Errc::version_mismatch, "registry.json differs from this build's search spaces at registry version " +
                                     std::to_string(kRegistryVersion));

  const auto sel = bundle_detail::read_strict(dir / "selector.json");
  bundle_detail::expect_version(sel, "feature_schema_version", kFeatureSchemaVersion, "selector.json");
  b.selector.forest = RandomForest::from_json(sel);
  b.selector.schema_version = sel.at("feature_schema_version").get<int>();
  if (b.selector.forest.n_features() != static_cast<int>(kNumFeatures) ||
      b.selector.forest.n_classes() != static_cast<int>(kNumDetectors))
    fail(Errc::corrupt_file, "selector.json has the wrong feature or class count");

  for (DetectorId id : kAllDetectors) {
    const std::string file = "tuner_" + std::string(to_string(id)) + ".json";
    const auto tj = bundle_detail::read_strict(dir / file);
    bundle_detail::expect_version(tj, "registry_version", kRegistryVersion, file);
    auto t = TunerModel::from_json(tj);
    if (t.detector() != id || t.n_inputs() != kNumFeatures)
      fail(Errc::corrupt_file, file + " does not describe a " + std::string(to_string(id)) + " tuner");
    b.tuners.push_back(std::move(t));
  }
  return b;
}

}  // namespace tsad
