// tsad: simulate corpora, build training tables, train the selector and
// tuners, and run detection from the command line.
//
// Exit status: 0 ok, 2 config error, 3 data error, 4 model error.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "run_config.hpp"
#include "tsad/automl/models.hpp"
#include "tsad/automl/training.hpp"
#include "tsad/core/io.hpp"
#include "tsad/detectors/detect.hpp"
#include "tsad/evaluation/evaluate.hpp"
#include "tsad/features/extract.hpp"
#include "tsad/pipeline/benchmark.hpp"
#include "tsad/simulator/base_series.hpp"
#include "tsad/simulator/corpus.hpp"
#include "tsad/simulator/injection.hpp"
#include "tsad/util/log.hpp"
#include "tsad/util/parallel.hpp"

namespace fs = std::filesystem;
using namespace tsad;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kConfig = 2, kData = 3, kModel = 4 };

// Raised for failures while reading a model bundle, whatever the cause.
struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_for(Errc c) {
  switch (c) {
    case Errc::invalid_config: return kConfig;
    case Errc::schema_mismatch:
    case Errc::version_mismatch:
    case Errc::corrupt_file: return kModel;
    default: return kData;
  }
}

// Flags shared by every subcommand; unset ones fall back to the config file.
struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::size_t> margin;
  std::optional<int> budget;
  std::optional<std::string> detector;
  bool quiet = false;
};

cli::RunConfig resolve(const Common& c) {
  cli::RunConfig rc = c.config.empty() ? cli::RunConfig{} : cli::load_config(c.config);
  if (c.seed) rc.seed = *c.seed;
  if (c.jobs) rc.jobs = *c.jobs;
  if (c.margin) rc.margin = *c.margin;
  if (c.budget) rc.budget = *c.budget;
  if (c.detector) {
    json d = rc.detector.value_or(json::object());
    const bool same = d.contains("detector") && d.at("detector") == *c.detector;
    rc.detector = json{{"detector", *c.detector}, {"params", same && d.contains("params") ? d.at("params") : json::object()}};
  }
  if (rc.jobs <= 0) rc.jobs = default_jobs();
  cli::validate(rc);
  return rc;
}

DetectorSpec forced_spec(const json& j) {
  try {
    return spec_from_json(j);
  } catch (const Error& e) {
    fail(Errc::invalid_config, e.what());
  } catch (const json::exception& e) {
    fail(Errc::invalid_config, std::string("detector: ") + e.what());
  }
}

ModelBundle load_bundle(const fs::path& dir) {
  try {
    return load_models(dir);
  } catch (const Error& e) {
    throw ModelError(e.what());
  }
}

std::vector<fs::path> csv_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) fail(Errc::io_error, "not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".csv") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out || !(out << text)) fail(Errc::io_error, "cannot write " + path.string());
}

json probabilities_json(const std::vector<double>& p) {
  json j = json::object();
  for (std::size_t d = 0; d < kNumDetectors; ++d) j[std::string(to_string(kAllDetectors[d]))] = p[d];
  return j;
}

// simulate ------------------------------------------------------------------

struct SimulateArgs {
  std::string out;
  std::string input;
};

void cmd_simulate(const Common& common, const SimulateArgs& a) {
  const auto rc = resolve(common);
  std::vector<TimeSeries> inputs;
  json extra{{"seed", rc.seed}};
  if (!a.input.empty()) {
    const auto files = csv_files(a.input);
    if (files.empty()) fail(Errc::empty_input, "no .csv files in " + a.input + " to mimic");
    json names = json::array();
    for (const auto& f : files) {
      inputs.push_back(io::read_csv(f));
      names.push_back(f.filename().string());
    }
    extra["source"] = "input";
    extra["inputs"] = names;
  } else {
    const auto bases = rc.bases.empty() ? synthetic_preset(derive_seed(rc.seed, {1})) : rc.bases;
    json cfgs = json::array();
    for (const auto& b : bases) {
      inputs.push_back(generate_base(b));
      cfgs.push_back(base_config_json(b));
    }
    extra["source"] = "generated";
    extra["bases"] = cfgs;
  }
  CorpusConfig cc;
  cc.copies = rc.copies.value_or(cli::kCorpusCopies);
  cc.kinds = rc.kinds;
  cc.injection = rc.injection;
  cc.master_seed = derive_seed(rc.seed, {2});
  cc.jobs = rc.jobs;
  const auto corpus = build_corpus(inputs, cc);
  write_corpus(a.out, corpus, cc, extra);
  log::info("simulate: wrote " + std::to_string(corpus.size()) + " labeled series to " + a.out);
}

// inject --------------------------------------------------------------------

struct InjectArgs {
  std::string input;
  std::string out;
  std::string kind = "spike";
};

void cmd_inject(const Common& common, const InjectArgs& a) {
  const auto rc = resolve(common);
  AnomalyKind kind;
  try {
    kind = anomaly_kind_from_string(a.kind);
  } catch (const Error& e) {
    fail(Errc::invalid_config, e.what());
  }
  InjectionConfig inj = rc.injection;
  if (common.seed) inj.seed = *common.seed;
  const auto series = io::read_csv(a.input);
  LabeledSeries labeled = [&] {
    try {
      return inject(series, kind, inj);
    } catch (const Error& e) {
      if (e.code() == Errc::invalid_argument) fail(Errc::invalid_config, e.what());
      throw;
    }
  }();
  if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
  io::write_labeled(a.out, labeled);
  log::info("inject: " + std::to_string(labeled.labels.size()) + " " + a.kind + " anomalies -> " + a.out);
}

// detect / predict ----------------------------------------------------------

struct DetectArgs {
  std::string input;
  std::string models;
  std::string out;
  std::optional<int> period;
};

DetectorSpec choose(const cli::RunConfig& rc, const std::string& models, const TimeSeries& series,
                    std::string& source) {
  if (rc.detector) {
    source = "forced";
    return forced_spec(*rc.detector);
  }
  if (models.empty()) fail(Errc::invalid_config, "give --detector or --models");
  source = "models";
  const auto bundle = load_bundle(models);
  try {
    return recommend(series, bundle);
  } catch (const Error& e) {
    if (exit_for(e.code()) == kModel) throw ModelError(e.what());
    throw;
  }
}

void cmd_detect(const Common& common, const DetectArgs& a) {
  const auto rc = resolve(common);
  auto series = io::read_csv(a.input, a.period);
  std::string source;
  const auto spec = choose(rc, a.models, series, source);
  log::Stopwatch sw;
  const auto d = run_detection(series, spec, rc.margin);
  log::info("detect: " + std::string(to_string(spec.id())) + " in " + std::to_string(sw.seconds()) + " s");
  json j = detection_json(d);
  j["margin"] = rc.margin;
  j["selected_by"] = source;
  std::cout << to_string(spec.id()) << ":";
  for (auto c : d.changepoints) std::cout << " " << c;
  std::cout << "\n";
  if (!a.out.empty()) write_text(a.out, j.dump(1) + "\n");
}

struct PredictArgs {
  std::string input;
  std::string models;
  std::string out;
  std::optional<int> period;
};

void cmd_predict(const Common& common, const PredictArgs& a) {
  (void)resolve(common);
  const auto series = io::read_csv(a.input, a.period);
  const auto bundle = load_bundle(a.models);
  const auto f = extract(series);
  json j;
  try {
    const auto spec = recommend(f, bundle.selector, bundle.tuners);
    j = {{"detector", std::string(to_string(spec.id()))},
         {"params", params_to_json(spec.params)},
         {"probabilities", probabilities_json(bundle.selector.probabilities(f))}};
  } catch (const Error& e) {
    if (exit_for(e.code()) == kModel) throw ModelError(e.what());
    throw;
  }
  std::cout << j.at("detector").get<std::string>() << " " << j.at("params").dump() << "\n";
  if (!a.out.empty()) write_text(a.out, j.dump(1) + "\n");
}

// evaluate ------------------------------------------------------------------

struct EvaluateArgs {
  std::string corpus;
  std::string input;
  std::string models;
  std::string out;
};

void cmd_evaluate(const Common& common, const EvaluateArgs& a) {
  const auto rc = resolve(common);
  if (a.corpus.empty() == a.input.empty()) fail(Errc::invalid_config, "give exactly one of --corpus and --input");
  std::vector<std::pair<std::string, LabeledSeries>> items;
  if (!a.corpus.empty()) {
    for (auto& e : read_corpus(a.corpus))
      items.emplace_back(fs::path(corpus_file_name(e.input_index, e.copy_index)).stem().string(), std::move(e.labeled));
  } else {
    items.emplace_back(fs::path(a.input).stem().string(), io::read_labeled(a.input));
  }
  std::optional<ModelBundle> bundle;
  if (!rc.detector) {
    if (a.models.empty()) fail(Errc::invalid_config, "give --detector or --models");
    bundle = load_bundle(a.models);
  }

  std::vector<ReportRow> rows(items.size());
  std::vector<json> details(items.size());
  parallel_for(items.size(), rc.jobs, [&](std::size_t i) {
    const auto& [id, labeled] = items[i];
    const DetectorSpec spec = rc.detector ? forced_spec(*rc.detector) : recommend(labeled.series, *bundle);
    const auto d = run_detection(labeled.series, spec, rc.margin);
    const auto r = evaluate(labeled, d.changepoints, rc.eval());
    rows[i] = {id, std::string(to_string(spec.id())), r};
    details[i] = evaluation_json(r, rc.eval());
    details[i]["series_id"] = id;
    details[i]["detector"] = std::string(to_string(spec.id()));
    details[i]["params"] = params_to_json(spec.params);
    details[i]["changepoints"] = d.changepoints;
  });

  const fs::path out(a.out);
  fs::create_directories(out / "series");
  std::ofstream csv(out / "report.csv");
  write_report_csv(csv, rows);
  if (!csv) fail(Errc::io_error, "cannot write " + (out / "report.csv").string());
  for (std::size_t i = 0; i < items.size(); ++i)
    write_text(out / "series" / (items[i].first + ".json"), details[i].dump(1) + "\n");
  double mean_f = 0;
  for (const auto& r : rows) mean_f += r.result.f_score / double(rows.size());
  io::write_json(out / "manifest.json", {{"seed", rc.seed},
                                          {"margin", rc.margin},
                                          {"beta", rc.beta},
                                          {"n_series", rows.size()},
                                          {"mean_f", mean_f},
                                          {"selected_by", rc.detector ? "forced" : "models"}});
  std::cout << "series " << rows.size() << "  mean F " << mean_f << "\n";
}

// build-training / train ----------------------------------------------------

struct BuildArgs {
  std::string corpus;
  std::string out;
};

void cmd_build_training(const Common& common, const BuildArgs& a) {
  const auto rc = resolve(common);
  std::vector<LabeledSeries> corpus;
  for (auto& e : read_corpus(a.corpus)) corpus.push_back(std::move(e.labeled));
  log::Stopwatch sw;
  const auto table = build_training_table(corpus, {rc.budget, rc.seed}, rc.eval(), rc.jobs);
  write_training_table(a.out, table);
  std::map<std::string, int> labels;
  for (const auto& ex : table) ++labels[std::string(to_string(ex.best_detector))];
  io::write_json(fs::path(a.out).string() + ".manifest.json",
                 {{"seed", rc.seed},
                  {"budget", rc.budget},
                  {"margin", rc.margin},
                  {"beta", rc.beta},
                  {"corpus_size", corpus.size()},
                  {"rows", table.size()},
                  {"labels", labels}});
  log::info("build-training: " + std::to_string(table.size()) + " rows in " + std::to_string(sw.seconds()) + " s");
}

struct TrainArgs {
  std::string table;
  std::string out;
};

void cmd_train(const Common& common, const TrainArgs& a) {
  const auto rc = resolve(common);
  const auto table = read_training_table(a.table);
  TrainConfig tc;
  tc.forest = rc.forest;
  tc.tuner = rc.tuner;
  tc.forest.seed = derive_seed(rc.seed, {5});
  tc.tuner.seed = derive_seed(rc.seed, {6});
  auto bundle = train_models(table, tc);
  bundle.meta["seed"] = rc.seed;
  bundle.meta["table"] = fs::path(a.table).filename().string();
  save_models(a.out, bundle);
  log::info("train: selector and " + std::to_string(bundle.tuners.size()) + " tuners from " +
            std::to_string(table.size()) + " rows -> " + a.out);
}

// benchmark -----------------------------------------------------------------

struct BenchmarkArgs {
  std::string out;
};

void cmd_benchmark(const Common& common, const BenchmarkArgs& a) {
  const auto rc = resolve(common);
  BenchmarkConfig bc;
  bc.seed = rc.seed;
  bc.copies = rc.copies.value_or(cli::kBenchmarkCopies);
  bc.budget = rc.budget;
  bc.eval = rc.eval();
  bc.eval_fraction = rc.eval_fraction;
  bc.injection = rc.injection;
  bc.train.forest = rc.forest;
  bc.train.tuner = rc.tuner;
  bc.jobs = rc.jobs;
  bc.models_dir = fs::path(a.out) / "models";
  const auto r = run_benchmark(bc);
  std::ostringstream text;
  print_benchmark(text, r);
  write_text(fs::path(a.out) / "benchmark.txt", text.str());
  io::write_json(fs::path(a.out) / "benchmark.json", benchmark_json(r));
  std::cout << text.str();
  log::info("benchmark: " + std::to_string(r.seconds) + " s");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Changepoint and anomaly detection with automatic detector selection"};
  app.require_subcommand(1);
  app.fallthrough();
  app.footer(
      "Config: one JSON document; every key is optional and flags override it.\n"
      "  seed 1, margin 5, beta 1, budget 40 draws per detector, eval_fraction 0.2\n"
      "  injection.tau_dist 100 [paper-default]   spike z ~ N(20, 1) [paper-default]\n"
      "  spike sign ~ Ber(0.9) [paper-default]   level draws N(2, 1) [paper-default]\n"
      "  trend draws N(8, 1) [paper-default]\n"
      "  bases: 10 trend+weekly season+noise, 5 ARIMA(2,d,2), 2 iid N(3,1), 1 iid t [paper-default]\n"
      "  base length ~ Poisson(450), trend N(10,5), season N(5,3), noise N(2,2) [paper-default]\n"
      "Exit status: 0 ok, 2 config error, 3 data error, 4 model error.");

  Common common;
  app.add_option("--config", common.config, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--seed", common.seed, "master seed (default 1)");
  app.add_option("--jobs", common.jobs, "worker threads (default: number of processors)");
  app.add_option("--margin", common.margin, "match margin M in samples (default 5)");
  app.add_option("--budget", common.budget, "random-search draws per detector (default 40)");
  app.add_option("--detector", common.detector, "force this detector instead of the trained selector");
  app.add_flag("--quiet", common.quiet, "no progress output on stderr");

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "generate or mimic base series and inject anomalies");
  s->add_option("--out", sim.out, "corpus directory")->required();
  s->add_option("--input", sim.input, "directory of unlabeled .csv series to mimic instead of the preset");
  s->footer("copies per base: 24 [paper-default] (18 x 24 = 432 series); set \"copies\" in the config.");

  InjectArgs inj;
  auto* i = app.add_subcommand("inject", "inject one anomaly kind into a single series");
  i->add_option("--input", inj.input, "series .csv")->required()->check(CLI::ExistingFile);
  i->add_option("--out", inj.out, "labeled output .csv; labels go beside it")->required();
  i->add_option("--kind", inj.kind, "spike, level_shift or trend_shift")->capture_default_str();

  DetectArgs det;
  auto* d = app.add_subcommand("detect", "run the recommended (or forced) detector on a series");
  d->add_option("--input", det.input, "series .csv")->required();
  d->add_option("--models", det.models, "model bundle directory");
  d->add_option("--out", det.out, "detection JSON");
  d->add_option("--period", det.period, "samples per seasonal cycle");

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "score detections against labels");
  e->add_option("--corpus", ev.corpus, "corpus directory with manifest.json");
  e->add_option("--input", ev.input, "one labeled .csv");
  e->add_option("--models", ev.models, "model bundle directory");
  e->add_option("--out", ev.out, "report directory (report.csv, series/*.json)")->required();

  BuildArgs bt;
  auto* b = app.add_subcommand("build-training", "random search per series and detector; writes the training table");
  b->add_option("--corpus", bt.corpus, "corpus directory")->required();
  b->add_option("--out", bt.out, "training table .csv")->required();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "fit the selector forest and one tuner per detector");
  t->add_option("--table", tr.table, "training table .csv")->required()->check(CLI::ExistingFile);
  t->add_option("--out", tr.out, "model bundle directory")->required();

  PredictArgs pr;
  auto* p = app.add_subcommand("predict", "recommend a detector and hyperparameters for a series");
  p->add_option("--input", pr.input, "series .csv")->required();
  p->add_option("--models", pr.models, "model bundle directory")->required();
  p->add_option("--out", pr.out, "recommendation JSON");
  p->add_option("--period", pr.period, "samples per seasonal cycle");

  BenchmarkArgs bm;
  auto* m = app.add_subcommand("benchmark", "synthetic benchmark: train on 80% of bases, score the rest");
  m->add_option("--out", bm.out, "report directory")->required();
  m->footer("copies per base: 12 (216 series); the 432-series corpus uses 24 [paper-default].");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kConfig;
  }
  log::quiet() = common.quiet;

  try {
    if (*s) cmd_simulate(common, sim);
    else if (*i) cmd_inject(common, inj);
    else if (*d) cmd_detect(common, det);
    else if (*e) cmd_evaluate(common, ev);
    else if (*b) cmd_build_training(common, bt);
    else if (*t) cmd_train(common, tr);
    else if (*p) cmd_predict(common, pr);
    else if (*m) cmd_benchmark(common, bm);
  } catch (const ModelError& err) {
    std::cerr << "tsad: model error: " << err.what() << "\n";
    return kModel;
  } catch (const Error& err) {
    std::cerr << "tsad: " << err.what() << "\n";
    return exit_for(err.code());
  } catch (const json::exception& err) {
    std::cerr << "tsad: " << err.what() << "\n";
    return kData;
  } catch (const fs::filesystem_error& err) {
    std::cerr << "tsad: " << err.what() << "\n";
    return kData;
  }
  return kOk;
}
