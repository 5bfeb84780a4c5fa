#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsad/automl/models.hpp"
#include "tsad/automl/training.hpp"
#include "tsad/detectors/registry.hpp"
#include "tsad/evaluation/evaluate.hpp"
#include "tsad/features/extract.hpp"
#include "tsad/simulator/base_series.hpp"
#include "tsad/simulator/corpus.hpp"
#include "tsad/util/log.hpp"
#include "tsad/util/parallel.hpp"

namespace tsad {

struct BenchmarkConfig {
  std::uint64_t seed = 1;
  std::size_t copies = 12;  ///< injected copies per base series
  int budget = 40;
  EvalConfig eval;
  double eval_fraction = 0.2;
  InjectionConfig injection;
  TrainConfig train;
  std::filesystem::path models_dir;  ///< where the bundle is saved and reloaded; empty uses a temp dir
  int jobs = 0;
};

struct MethodScore {
  std::string method;
  double f_optimized = 0.0;
  double f_random = 0.0;
};

struct BenchmarkReport {
  std::uint64_t seed = 0;
  std::size_t margin = 0;
  int budget = 0;
  std::size_t n_train_series = 0;
  std::size_t n_eval_series = 0;
  std::vector<std::size_t> eval_bases;
  std::vector<MethodScore> rows;                  ///< AutoML first, then each detector
  std::array<double, kNumDetectors> f_default{};  ///< registry-default params
  /// picks[kind][detector]: how often the selector chose each detector per injected kind
  std::map<AnomalyKind, std::array<std::size_t, kNumDetectors>> picks;
  std::map<AnomalyKind, std::size_t> kind_counts;
  double seconds = 0.0;

  [[nodiscard]] const MethodScore& automl() const { return rows.front(); }
  [[nodiscard]] double best_default() const { return *std::max_element(f_default.begin(), f_default.end()); }

  /// Most frequently picked detector for `kind`; lowest index wins ties.
  [[nodiscard]] DetectorId plurality(AnomalyKind kind) const {
    const auto& c = picks.at(kind);
    return kAllDetectors[static_cast<std::size_t>(std::max_element(c.begin(), c.end()) - c.begin())];
  }
};

/// Bases are assigned to the eval split as a whole so no injected copy of an
/// eval base is seen during training.
inline std::vector<std::size_t> eval_base_indices(std::size_t n_bases, double fraction, std::uint64_t seed) {
  std::vector<std::size_t> idx(n_bases);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n_eval = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n_bases))), 1, n_bases - 1);
  idx.resize(n_eval);
  std::sort(idx.begin(), idx.end());
  return idx;
}

inline BenchmarkReport run_benchmark(const BenchmarkConfig& config) {
  log::Stopwatch clock;
  BenchmarkReport report;
  report.seed = config.seed;
  report.margin = config.eval.margin;
  report.budget = config.budget;

  std::vector<TimeSeries> bases;
  for (const auto& c : synthetic_preset(derive_seed(config.seed, {1}))) bases.push_back(generate_base(c));
  CorpusConfig cc;
  cc.copies = config.copies;
  cc.injection = config.injection;
  cc.master_seed = derive_seed(config.seed, {2});
  cc.jobs = config.jobs;
  const auto corpus = build_corpus(bases, cc);

  report.eval_bases = eval_base_indices(bases.size(), config.eval_fraction, derive_seed(config.seed, {3}));
  std::vector<LabeledSeries> train_set;
  std::vector<LabeledSeries> eval_set;
  for (const auto& e : corpus) {
    const bool is_eval =
        std::binary_search(report.eval_bases.begin(), report.eval_bases.end(), e.input_index);
    (is_eval ? eval_set : train_set).push_back(e.labeled);
  }
  report.n_train_series = train_set.size();
  report.n_eval_series = eval_set.size();
  log::info("benchmark: " + std::to_string(train_set.size()) + " training and " + std::to_string(eval_set.size()) +
            " evaluation series");

  const SearchBudget budget{config.budget, derive_seed(config.seed, {4})};
  const auto table = build_training_table(train_set, budget, config.eval, config.jobs);
  log::info("benchmark: training table built in " + std::to_string(clock.seconds()) + " s");

  TrainConfig tc = config.train;
  tc.forest.seed = derive_seed(config.seed, {5});
  tc.tuner.seed = derive_seed(config.seed, {6});
  ModelBundle trained = train_models(table, tc);
  trained.meta["seed"] = config.seed;
  trained.meta["budget"] = config.budget;
  trained.meta["margin"] = config.eval.margin;
  std::filesystem::path dir = config.models_dir;
  if (dir.empty()) dir = std::filesystem::temp_directory_path() / ("tsad_benchmark_" + std::to_string(config.seed));
  save_models(dir, trained);
  const ModelBundle models = load_models(dir);

  struct EvalRow {
    DetectorId pick = DetectorId::outlier;
    double automl_opt = 0.0;
    double automl_rand = 0.0;
    std::array<double, kNumDetectors> opt{};
    std::array<double, kNumDetectors> rand{};
    std::array<double, kNumDetectors> dflt{};
  };
  std::vector<EvalRow> rows(eval_set.size());
  parallel_for(eval_set.size(), config.jobs, [&](std::size_t i) {
    const auto& s = eval_set[i];
    EvalRow& r = rows[i];
    const FeatureVector f = extract(s.series);
    r.pick = models.selector.predict(f);
    for (std::size_t d = 0; d < kNumDetectors; ++d) {
      const DetectorId id = kAllDetectors[d];
      r.opt[d] = score_params(s, models.tuner(id).predict(f.span()), config.eval);
      Rng rng(derive_seed(config.seed, {7, i, d}));
      r.rand[d] = score_params(s, sample_params(id, rng), config.eval);
      r.dflt[d] = score_params(s, default_params(id), config.eval);
    }
    r.automl_opt = r.opt[index_of(r.pick)];
    r.automl_rand = r.rand[index_of(r.pick)];
  });

  const double n = static_cast<double>(std::max<std::size_t>(rows.size(), 1));
  MethodScore automl{"AutoML", 0.0, 0.0};
  std::array<MethodScore, kNumDetectors> per{};
  for (std::size_t d = 0; d < kNumDetectors; ++d) per[d].method = std::string(to_string(kAllDetectors[d]));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    automl.f_optimized += rows[i].automl_opt / n;
    automl.f_random += rows[i].automl_rand / n;
    for (std::size_t d = 0; d < kNumDetectors; ++d) {
      per[d].f_optimized += rows[i].opt[d] / n;
      per[d].f_random += rows[i].rand[d] / n;
      report.f_default[d] += rows[i].dflt[d] / n;
    }
    const AnomalyKind kind = eval_set[i].kind;
    report.picks[kind][index_of(rows[i].pick)] += 1;
    report.kind_counts[kind] += 1;
  }
  report.rows.push_back(automl);
  for (const auto& m : per) report.rows.push_back(m);
  report.seconds = clock.seconds();
  return report;
}

inline nlohmann::json benchmark_json(const BenchmarkReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& m : r.rows)
    rows.push_back({{"method", m.method}, {"f_optimized", m.f_optimized}, {"f_random", m.f_random}});
  nlohmann::json dflt = nlohmann::json::object();
  for (std::size_t d = 0; d < kNumDetectors; ++d) dflt[std::string(to_string(kAllDetectors[d]))] = r.f_default[d];
  nlohmann::json picks = nlohmann::json::object();
  for (const auto& [kind, counts] : r.picks) {
    nlohmann::json c = nlohmann::json::object();
    for (std::size_t d = 0; d < kNumDetectors; ++d) c[std::string(to_string(kAllDetectors[d]))] = counts[d];
    picks[std::string(to_string(kind))] = c;
  }
  return {{"seed", r.seed},
          {"margin", r.margin},
          {"budget", r.budget},
          {"n_train_series", r.n_train_series},
          {"n_eval_series", r.n_eval_series},
          {"eval_bases", r.eval_bases},
          {"methods", rows},
          {"f_default", dflt},
          {"selected_by_kind", picks}};
}

/// Plain-text tables: methods x {F optimized, F random}, then picks per kind.
inline void print_benchmark(std::ostream& out, const BenchmarkReport& r) {
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return std::string(buf);
  };
  out << "seed " << r.seed << "  margin " << r.margin << "  budget " << r.budget << "  train " << r.n_train_series
      << "  eval " << r.n_eval_series << "\n\n";
  out << "method           F optimized  F random  F default\n";
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    std::string name = r.rows[i].method;
    name.resize(16, ' ');
    out << name << " " << fmt(r.rows[i].f_optimized) << "        " << fmt(r.rows[i].f_random) << "     "
        << (i == 0 ? std::string("  -  ") : fmt(r.f_default[i - 1])) << "\n";
  }
  out << "\nselected detector by injected kind\nkind          ";
  for (auto id : kAllDetectors) {
    std::string name(to_string(id));
    name.resize(15, ' ');
    out << name;
  }
  out << "\n";
  for (const auto& [kind, counts] : r.picks) {
    std::string name(to_string(kind));
    name.resize(14, ' ');
    out << name;
    for (auto c : counts) {
      std::string v = std::to_string(c);
      v.resize(15, ' ');
      out << v;
    }
    out << "\n";
  }
}

}  // namespace tsad
