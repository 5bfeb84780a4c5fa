#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tsad/core/error.hpp"
#include "tsad/core/time_series.hpp"
#include "tsad/detectors/detect.hpp"
#include "tsad/detectors/registry.hpp"
#include "tsad/evaluation/evaluate.hpp"
#include "tsad/features/extract.hpp"
#include "tsad/util/log.hpp"
#include "tsad/util/parallel.hpp"
#include "tsad/util/random.hpp"

namespace tsad {

struct SearchBudget {
  int draws_per_detector = 40;
  std::uint64_t seed = 0;

  void validate() const {
    if (draws_per_detector < 1) fail(Errc::invalid_config, "draws_per_detector must be >= 1");
  }
};

struct TrainingExample {
  FeatureVector features;
  DetectorId best_detector = DetectorId::outlier;
  std::array<DetectorParams, kNumDetectors> best_params{};
  /// Every draw that reached the detector's best F, in draw order; the first is best_params.
  std::array<std::vector<DetectorParams>, kNumDetectors> tied_params{};
  std::array<double, kNumDetectors> best_f{};
  bool tie_broken = false;
  std::size_t series_index = 0;
  AnomalyKind kind = AnomalyKind::unknown;
};

/// The k-th uniform draw of a search; depends only on (seed, detector, k).
inline DetectorParams search_draw(DetectorId id, std::uint64_t seed, std::size_t k) {
  Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(index_of(id)), k}));
  return sample_params(id, rng);
}

/// F of one configuration; detector failures count as F = 0.
inline double score_params(const LabeledSeries& series, const DetectorParams& params, const EvalConfig& eval) {
  try {
    const auto cps = detect(series.series, DetectorSpec{params}, eval.margin);
    return evaluate(series, cps, eval).f_score;
  } catch (const Error&) {
    return 0.0;
  }
}

/// Random search; ties go to the lowest draw index.
inline std::pair<DetectorParams, double> best_params_for(const LabeledSeries& series, DetectorId id,
                                                         const SearchBudget& budget, const EvalConfig& eval) {
  budget.validate();
  DetectorParams best = search_draw(id, budget.seed, 0);
  double best_f = score_params(series, best, eval);
  for (int k = 1; k < budget.draws_per_detector; ++k) {
    auto p = search_draw(id, budget.seed, static_cast<std::size_t>(k));
    const double f = score_params(series, p, eval);
    if (f > best_f) {
      best_f = f;
      best = std::move(p);
    }
  }
  return {best, best_f};
}

/// Per-series search seed inside a table build.
inline std::uint64_t series_search_seed(std::uint64_t seed, std::size_t i) { return derive_seed(seed, {0x5eed, i}); }

/// Every (series, detector, draw) triple runs as an independent work item.
inline std::vector<TrainingExample> build_training_table(const std::vector<LabeledSeries>& corpus,
                                                         const SearchBudget& budget, const EvalConfig& eval,
                                                         int jobs = 0) {
  if (corpus.empty()) fail(Errc::empty_input, "training corpus is empty");
  budget.validate();
  const std::size_t n = corpus.size();
  const std::size_t draws = static_cast<std::size_t>(budget.draws_per_detector);

  std::vector<std::optional<FeatureVector>> feats(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    try {
      feats[i] = extract(corpus[i].series);
    } catch (const Error& e) {
      log::warn("skipping series " + std::to_string(i) + ": " + e.what());
    }
  });

  std::vector<double> f(n * kNumDetectors * draws, 0.0);
  std::array<double, kNumDetectors> seconds{};
  std::mutex time_mutex;
  parallel_for(n * kNumDetectors * draws, jobs, [&](std::size_t w) {
    const std::size_t i = w / (kNumDetectors * draws);
    if (!feats[i]) return;
    const std::size_t d = (w / draws) % kNumDetectors;
    const std::size_t k = w % draws;
    log::Stopwatch sw;
    f[w] = score_params(corpus[i], search_draw(kAllDetectors[d], series_search_seed(budget.seed, i), k), eval);
    const double s = sw.seconds();
    std::lock_guard lock(time_mutex);
    seconds[d] += s;
  });
  for (std::size_t d = 0; d < kNumDetectors; ++d)
    log::info("search time " + std::string(to_string(kAllDetectors[d])) + ": " + std::to_string(seconds[d]) + " s");

  std::vector<TrainingExample> table;
  for (std::size_t i = 0; i < n; ++i) {
    if (!feats[i]) continue;
    TrainingExample ex;
    ex.features = *feats[i];
    ex.series_index = i;
    ex.kind = corpus[i].kind;
    const std::uint64_t seed = series_search_seed(budget.seed, i);
    for (std::size_t d = 0; d < kNumDetectors; ++d) {
      const double* row = &f[(i * kNumDetectors + d) * draws];
      std::size_t best = 0;
      for (std::size_t k = 1; k < draws; ++k)
        if (row[k] > row[best]) best = k;
      ex.best_f[d] = row[best];
      ex.best_params[d] = search_draw(kAllDetectors[d], seed, best);
      for (std::size_t k = best; k < draws; ++k)
        if (row[k] == row[best]) ex.tied_params[d].push_back(search_draw(kAllDetectors[d], seed, k));
    }
    const double top = *std::max_element(ex.best_f.begin(), ex.best_f.end());
    std::vector<std::size_t> tied;
    for (std::size_t d = 0; d < kNumDetectors; ++d)
      if (ex.best_f[d] == top) tied.push_back(d);
    std::size_t pick = tied.front();
    if (tied.size() > 1) {
      Rng rng(derive_seed(seed, {0x71e}));
      pick = tied[std::uniform_int_distribution<std::size_t>(0, tied.size() - 1)(rng)];
      ex.tie_broken = true;
    }
    ex.best_detector = kAllDetectors[pick];
    table.push_back(std::move(ex));
  }
  return table;
}

namespace table_detail {

inline std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

/// Splits one CSV record with RFC 4180 quoting (no embedded newlines).
inline std::vector<std::string> split_record(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_quotes) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        in_quotes = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (in_quotes) fail(Errc::parse_error, "unterminated quoted field");
  out.push_back(std::move(cur));
  return out;
}

inline std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline double parse_num(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(Errc::parse_error, "bad number '" + s + "' in " + what);
  }
}

inline void expect_schema(std::istream& in, const std::string& what) {
  std::string line;
  if (!std::getline(in, line)) fail(Errc::parse_error, what + " is empty");
  const std::string prefix = "# schema=";
  if (line.rfind(prefix, 0) != 0) fail(Errc::parse_error, what + " lacks a '# schema=' line");
  const int v = static_cast<int>(parse_num(line.substr(prefix.size()), what));
  if (v != kFeatureSchemaVersion)
    fail(Errc::schema_mismatch, what + " has feature schema " + std::to_string(v) + ", expected " +
                                    std::to_string(kFeatureSchemaVersion));
}

inline void expect_feature_header(const std::vector<std::string>& cols, const std::string& what) {
  if (cols.size() < kNumFeatures) fail(Errc::schema_mismatch, what + " header has too few columns");
  for (std::size_t j = 0; j < kNumFeatures; ++j)
    if (cols[j] != kFeatureNames[j])
      fail(Errc::schema_mismatch, what + " column " + std::to_string(j) + " is '" + cols[j] + "', expected '" +
                                      std::string(kFeatureNames[j]) + "'");
}

}  // namespace table_detail

inline void write_feature_matrix(std::ostream& out, const std::vector<FeatureVector>& rows) {
  out << "# schema=" << kFeatureSchemaVersion << "\n";
  for (std::size_t j = 0; j < kNumFeatures; ++j) out << (j ? "," : "") << kFeatureNames[j];
  out << "\n";
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < kNumFeatures; ++j) out << (j ? "," : "") << table_detail::num(r.values[j]);
    out << "\n";
  }
}

inline std::vector<FeatureVector> read_feature_matrix(std::istream& in) {
  table_detail::expect_schema(in, "feature matrix");
  std::string line;
  if (!std::getline(in, line)) fail(Errc::parse_error, "feature matrix lacks a header");
  table_detail::expect_feature_header(table_detail::split_record(line), "feature matrix");
  std::vector<FeatureVector> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cols = table_detail::split_record(line);
    if (cols.size() != kNumFeatures) fail(Errc::parse_error, "feature matrix row has the wrong column count");
    FeatureVector fv;
    for (std::size_t j = 0; j < kNumFeatures; ++j) fv.values[j] = table_detail::parse_num(cols[j], "feature matrix");
    rows.push_back(fv);
  }
  return rows;
}

/// Feature columns, then best_detector, tie_broken, kind, series_index and a
/// JSON column with each detector's best F and params.
inline void write_training_table(std::ostream& out, const std::vector<TrainingExample>& table) {
  out << "# schema=" << kFeatureSchemaVersion << "\n";
  for (std::size_t j = 0; j < kNumFeatures; ++j) out << kFeatureNames[j] << ",";
  out << "best_detector,tie_broken,kind,series_index,search\n";
  for (const auto& ex : table) {
    for (std::size_t j = 0; j < kNumFeatures; ++j) out << table_detail::num(ex.features.values[j]) << ",";
    nlohmann::json detail = nlohmann::json::object();
    for (std::size_t d = 0; d < kNumDetectors; ++d)
    {
      nlohmann::json tied = nlohmann::json::array();
      for (const auto& p : ex.tied_params[d]) tied.push_back(params_to_json(p));
      detail[std::string(to_string(kAllDetectors[d]))] = {
          {"f", ex.best_f[d]}, {"params", params_to_json(ex.best_params[d])}, {"tied", tied}};
    }
    out << to_string(ex.best_detector) << "," << (ex.tie_broken ? 1 : 0) << "," << to_string(ex.kind) << ","
        << ex.series_index << "," << table_detail::quote(detail.dump()) << "\n";
  }
}

inline std::vector<TrainingExample> read_training_table(std::istream& in) {
  table_detail::expect_schema(in, "training table");
  std::string line;
  if (!std::getline(in, line)) fail(Errc::parse_error, "training table lacks a header");
  table_detail::expect_feature_header(table_detail::split_record(line), "training table");
  std::vector<TrainingExample> table;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cols = table_detail::split_record(line);
    if (cols.size() != kNumFeatures + 5) fail(Errc::parse_error, "training table row has the wrong column count");
    TrainingExample ex;
    for (std::size_t j = 0; j < kNumFeatures; ++j)
      ex.features.values[j] = table_detail::parse_num(cols[j], "training table");
    ex.best_detector = detector_from_string(cols[kNumFeatures]);
    ex.tie_broken = cols[kNumFeatures + 1] == "1";
    ex.kind = anomaly_kind_from_string(cols[kNumFeatures + 2]);
    ex.series_index = static_cast<std::size_t>(table_detail::parse_num(cols[kNumFeatures + 3], "training table"));
    try {
      const auto detail = nlohmann::json::parse(cols[kNumFeatures + 4]);
      for (std::size_t d = 0; d < kNumDetectors; ++d) {
        const auto& e = detail.at(std::string(to_string(kAllDetectors[d])));
        ex.best_f[d] = e.at("f").get<double>();
        ex.best_params[d] = params_from_json(kAllDetectors[d], e.at("params"));
        if (e.contains("tied"))
          for (const auto& t : e.at("tied")) ex.tied_params[d].push_back(params_from_json(kAllDetectors[d], t));
      }
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::parse_error, std::string("training table search column: ") + e.what());
    }
    table.push_back(std::move(ex));
  }
  return table;
}

inline void write_training_table(const std::filesystem::path& path, const std::vector<TrainingExample>& table) {
  std::ofstream out(path);
  if (!out) fail(Errc::io_error, "cannot write " + path.string());
  write_training_table(out, table);
}

inline std::vector<TrainingExample> read_training_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_error, "cannot read " + path.string());
  return read_training_table(in);
}

}  // namespace tsad
