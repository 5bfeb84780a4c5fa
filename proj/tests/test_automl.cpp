#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "automl_fixtures.hpp"
#include "tsad/automl/models.hpp"
#include "tsad/automl/random_forest.hpp"
#include "tsad/automl/training.hpp"
#include "tsad/automl/tuner.hpp"
#include "tsad/core/io.hpp"
#include "tsad/simulator/base_series.hpp"
#include "tsad/simulator/injection.hpp"

using namespace tsad;
using Catch::Matchers::WithinAbs;

namespace {

Errc code_of(const std::function<void()>& f, std::string* message = nullptr) {
  try {
    f();
  } catch (const Error& e) {
    if (message) *message = e.what();
    return e.code();
  }
  FAIL("expected tsad::Error");
  return Errc::invalid_argument;
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("tsad_test_automl_" + name);
  std::filesystem::remove_all(p);
  return p;
}

LabeledSeries spiky(std::uint64_t seed, std::size_t n = 300) {
  Rng rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = z(rng);
  std::vector<std::size_t> at;
  for (std::size_t t = 60; t < n; t += 80) {
    v[t] += 20.0;
    at.push_back(t);
  }
  return LabeledSeries(TimeSeries::from_values(std::move(v), 7), at, AnomalyKind::spike);
}

}  // namespace

TEST_CASE("budget of one returns the first draw", "[automl][search]") {
  const auto s = spiky(1);
  const EvalConfig eval{5, 1.0};
  for (DetectorId id : kAllDetectors) {
    const auto [p, f] = best_params_for(s, id, {1, 42}, eval);
    CHECK(p == search_draw(id, 42, 0));
    CHECK(f == score_params(s, p, eval));
  }
}

TEST_CASE("search result is consistent with a rescore", "[automl][search]") {
  const auto s = spiky(2);
  const EvalConfig eval{5, 1.0};
  const auto [p, f] = best_params_for(s, DetectorId::cusum, {15, 7}, eval);
  CHECK(f == score_params(s, p, eval));
  for (std::size_t k = 0; k < 15; ++k) CHECK(score_params(s, search_draw(DetectorId::cusum, 7, k), eval) <= f);
  CHECK(within_space(p));
}

TEST_CASE("outlier search finds big spikes", "[automl][search]") {
  int perfect = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto [p, f] = best_params_for(spiky(100 + seed), DetectorId::outlier, {50, seed}, {5, 1.0});
    perfect += f == 1.0;
  }
  CHECK(perfect >= 9);
}

TEST_CASE("training table labels and round trip", "[automl][training]") {
  std::vector<LabeledSeries> corpus{spiky(3), spiky(4, 200)};
  // constant series with no labels: every detector that stays silent scores 1
  corpus.emplace_back(TimeSeries::from_values(std::vector<double>(120, 2.0), 7), std::vector<std::size_t>{},
                      AnomalyKind::unknown);
  const auto table = build_training_table(corpus, {4, 9}, {5, 1.0}, 1);
  REQUIRE(table.size() == 3);
  for (const auto& ex : table) {
    const double top = *std::max_element(ex.best_f.begin(), ex.best_f.end());
    CHECK(ex.best_f[index_of(ex.best_detector)] == top);
    std::size_t ties = 0;
    for (double f : ex.best_f) ties += f == top;
    CHECK(ex.tie_broken == (ties > 1));
    for (std::size_t d = 0; d < kNumDetectors; ++d) {
      REQUIRE(!ex.tied_params[d].empty());
      CHECK(ex.tied_params[d].front() == ex.best_params[d]);
    }
  }
  CHECK(table[2].tie_broken);
  CHECK(table[0].kind == AnomalyKind::spike);

  CHECK(build_training_table(corpus, {4, 9}, {5, 1.0}, 3).size() == 3);

  std::stringstream buf;
  write_training_table(buf, table);
  const auto back = read_training_table(buf);
  REQUIRE(back.size() == table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    CHECK(back[i].features == table[i].features);
    CHECK(back[i].best_detector == table[i].best_detector);
    CHECK(back[i].best_params == table[i].best_params);
    CHECK(back[i].tied_params == table[i].tied_params);
    CHECK(back[i].best_f == table[i].best_f);
    CHECK(back[i].tie_broken == table[i].tie_broken);
    CHECK(back[i].kind == table[i].kind);
    CHECK(back[i].series_index == table[i].series_index);
  }
  std::stringstream bad("# schema=1\nlength\n");
  CHECK(code_of([&] { read_training_table(bad); }) == Errc::schema_mismatch);
  std::string text = buf.str();
  std::stringstream cut(text.substr(0, text.rfind(',')) + "\n");
  CHECK(code_of([&] { read_training_table(cut); }) == Errc::parse_error);
  CHECK(code_of([] { build_training_table({}, {}, {5, 1.0}); }) == Errc::empty_input);
  CHECK(code_of([&] { build_training_table(corpus, {0, 1}, {5, 1.0}); }) == Errc::invalid_config);
}

TEST_CASE("single stump picks the best Gini split", "[automl][forest]") {
  Rng rng(8);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 40;
    const int d = 3;
    std::vector<std::vector<double>> x(n, std::vector<double>(d));
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (double& v : x[i]) v = z(rng);
      y[i] = (x[i][rep % d] + 0.7 * z(rng)) > 0 ? 1 : 0;
    }
    ForestParams p;
    p.n_trees = 1;
    p.max_depth = 1;
    p.bootstrap = false;
    p.max_features = d;
    RandomForest rf;
    rf.fit(x, y, 2, p);
    const auto& root = rf.trees().front().nodes.front();

    // brute force over all features and midpoints
    auto gini = [](double a, double b) {
      const double t = a + b;
      return t == 0 ? 0.0 : 1.0 - (a / t) * (a / t) - (b / t) * (b / t);
    };
    double best = 1e9;
    int bf = -1;
    double bt = 0;
    for (int f = 0; f < d; ++f) {
      std::vector<double> vals;
      for (const auto& r : x) vals.push_back(r[f]);
      std::sort(vals.begin(), vals.end());
      for (std::size_t k = 0; k + 1 < n; ++k) {
        const double thr = 0.5 * (vals[k] + vals[k + 1]);
        double l[2] = {0, 0}, r[2] = {0, 0};
        for (std::size_t i = 0; i < n; ++i) (x[i][f] <= thr ? l : r)[y[i]] += 1;
        const double imp = ((l[0] + l[1]) * gini(l[0], l[1]) + (r[0] + r[1]) * gini(r[0], r[1])) / double(n);
        if (imp < best - 1e-12) {
          best = imp;
          bf = f;
          bt = thr;
        }
      }
    }
    if (best >= gini(std::count(y.begin(), y.end(), 0), std::count(y.begin(), y.end(), 1)) - 1e-12) {
      CHECK(root.feature < 0);
      continue;
    }
    CHECK(root.feature == bf);
    CHECK_THAT(root.threshold, WithinAbs(bt, 1e-12));
  }
}

TEST_CASE("forest separates a linear boundary", "[automl][forest]") {
  Rng rng(2);
  std::normal_distribution<double> z(0.0, 1.0);
  auto draw = [&](std::size_t n, std::vector<std::vector<double>>& x, std::vector<int>& y) {
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> r(4);
      for (double& v : r) v = z(rng);
      y.push_back(r[0] + r[1] > 0 ? 1 : 0);
      x.push_back(std::move(r));
    }
  };
  std::vector<std::vector<double>> x, xt;
  std::vector<int> y, yt;
  draw(400, x, y);
  draw(400, xt, yt);
  ForestParams p;
  p.n_trees = 60;
  RandomForest rf;
  rf.fit(x, y, 2, p);
  int train_ok = 0;
  for (std::size_t i = 0; i < x.size(); ++i) train_ok += rf.predict(x[i]) == y[i];
  CHECK(train_ok >= 0.95 * double(x.size()));
  int ok = 0;
  for (std::size_t i = 0; i < xt.size(); ++i) {
    const auto pr = rf.predict_proba(xt[i]);
    double s = 0;
    for (double v : pr) s += v;
    CHECK_THAT(s, WithinAbs(1.0, 1e-12));
    ok += rf.predict(xt[i]) == yt[i];
  }
  CHECK(ok >= 0.9 * double(xt.size()));
  const auto back = RandomForest::from_json(rf.to_json());
  for (std::size_t i = 0; i < 20; ++i) CHECK(back.predict_proba(xt[i]) == rf.predict_proba(xt[i]));
}

TEST_CASE("selector ignores row order and checks its input", "[automl][selector]") {
  auto table = suite::synthetic_table(60, 4);
  ForestParams p;
  p.n_trees = 25;
  const auto a = train_selector(table, p);
  std::mt19937_64 g(1);
  std::shuffle(table.begin(), table.end(), g);
  const auto b = train_selector(table, p);
  Rng rng(3);
  for (int i = 0; i < 30; ++i) {
    const auto f = suite::random_features(rng);
    CHECK(a.probabilities(f) == b.probabilities(f));
  }
  table.resize(19);
  CHECK(code_of([&] { train_selector(table, p); }) == Errc::insufficient_data);
  auto same = suite::synthetic_table(30, 5);
  for (auto& ex : same) ex.best_detector = DetectorId::bocpd;
  std::string msg;
  CHECK(code_of([&] { train_selector(same, p); }, &msg) == Errc::single_class);
  CHECK(msg.find("bocpd") != std::string::npos);
  FeatureVector old;
  old.schema_version = 0;
  CHECK(code_of([&] { (void)a.predict(old); }) == Errc::schema_mismatch);
}

TEST_CASE("tuner gradient matches finite differences", "[automl][tuner]") {
  CHECK(suite::tuner_gradient_error() < 1e-4);
  CHECK(suite::tuner_gradient_error(17) < 1e-4);
}

TEST_CASE("tuner fits a constant target", "[automl][tuner]") { CHECK(suite::constant_fit_error() < 0.01); }

TEST_CASE("tuner learns a separable boolean head", "[automl][tuner]") {
  Rng rng(6);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<std::vector<double>> x;
  std::vector<std::vector<double>> v;
  auto defaults = params_to_values(MkParams{});
  for (int i = 0; i < 200; ++i) {
    std::vector<double> r(3);
    for (double& e : r) e = z(rng);
    auto t = defaults;
    t[1] = r[0] - 0.5 * r[2] > 0 ? 1.0 : 0.0;
    x.push_back(r);
    v.push_back(t);
  }
  TunerParams p;
  p.seed = 2;
  TunerModel m(DetectorId::mkdetector, 3, p);
  m.fit(x, v);
  int ok = 0;
  for (std::size_t i = 0; i < x.size(); ++i) ok += m.predict_values(x[i])[1] == v[i][1];
  CHECK(ok >= 0.95 * double(x.size()));
}

TEST_CASE("tuner row selection and errors", "[automl][tuner]") {
  const auto table = suite::synthetic_table(40, 9);
  TunerParams p;
  p.epochs = 50;
  const auto m = train_tuner(table, DetectorId::statsig, p);
  CHECK(m.detector() == DetectorId::statsig);
  std::vector<TrainingExample> few(table.begin(), table.begin() + 10);
  CHECK(code_of([&] { train_tuner(few, DetectorId::statsig, p); }) == Errc::insufficient_data);
  CHECK(code_of([&] { (void)m.predict_values(std::vector<double>(3, 0.0)); }) == Errc::schema_mismatch);
}

TEST_CASE("recommendations stay inside the registry", "[automl]") {
  const auto bundle = train_models(suite::synthetic_table(60, 2), suite::fast_train_config());
  REQUIRE(bundle.tuners.size() == kNumDetectors);
  Rng rng(9);
  for (int i = 0; i < 100; ++i) {
    auto f = suite::random_features(rng);
    for (double& v : f.values) v *= 20;
    CHECK(within_space(recommend(f, bundle.selector, bundle.tuners).params));
  }
  CHECK_NOTHROW(recommend(spiky(1).series, bundle));
}

TEST_CASE("bundle round trip keeps predictions", "[automl][bundle]") {
  CHECK(suite::bundle_roundtrip_mismatches(scratch("rt")) == 0);
}

TEST_CASE("bundle load failures are typed", "[automl][bundle]") {
  const auto dir = scratch("bad");
  save_models(dir, train_models(suite::synthetic_table(40, 3), suite::fast_train_config()));
  REQUIRE_NOTHROW(load_models(dir));

  const auto sel = dir / "selector.json";
  std::string text;
  {
    std::ifstream in(sel);
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  std::ofstream(sel) << text.substr(0, text.size() / 2);
  CHECK(code_of([&] { load_models(dir); }) == Errc::corrupt_file);
  std::ofstream(sel) << text;

  auto meta = io::read_json(dir / "meta.json");
  meta["registry_version"] = 0;
  io::write_json(dir / "meta.json", meta);
  std::string msg;
  CHECK(code_of([&] { load_models(dir); }, &msg) == Errc::version_mismatch);
  CHECK(msg.find("is 0") != std::string::npos);
  CHECK(msg.find("expects 1") != std::string::npos);

  std::filesystem::remove_all(dir);
  CHECK(code_of([&] { load_models(dir); }) == Errc::io_error);
}

TEST_CASE("one-feature stump reproduces the threshold split", "[automl][forest]") {
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (int i = 0; i < 10; ++i) {
    x.push_back({double(i)});
    y.push_back(i >= 5);
  }
  ForestParams p;
  p.n_trees = 1;
  p.max_depth = 1;
  p.bootstrap = false;
  RandomForest rf;
  rf.fit(x, y, 2, p);
  const auto& root = rf.trees().front().nodes.front();
  CHECK(root.feature == 0);
  CHECK(root.threshold == 4.5);
  CHECK(rf.predict_proba(std::vector<double>{4.0}) == std::vector<double>{1.0, 0.0});
  CHECK(rf.predict_proba(std::vector<double>{5.0}) == std::vector<double>{0.0, 1.0});
}

namespace {

std::vector<TrainingExample> spike_table() {
  std::vector<LabeledSeries> corpus;
  for (std::uint64_t s = 0; s < 20; ++s) {
    BaseSeriesConfig c;
    c.kind = BaseKind::trend_seasonal_noise;
    c.length_mean = 250;
    c.seed = s;
    InjectionConfig inj;
    inj.seed = s;
    inj.spike.p_spike = 0.0;
    corpus.push_back(inject(generate_base(c), AnomalyKind::spike, inj));
  }
  return build_training_table(corpus, {40, 5}, {5, 1.0}, 1);
}

}  // namespace

// Known shortfall: the spikes are found perfectly by outlier, cusum and bocpd
// alike, so rows tie and the seeded-random tie rule spreads the labels.
TEST_CASE("outlier is the modal label on huge spikes", "[automl][training][!mayfail]") {
  const auto table = spike_table();
  std::array<int, kNumDetectors> counts{};
  int ties = 0;
  for (const auto& ex : table) {
    ++counts[index_of(ex.best_detector)];
    ties += ex.tie_broken;
  }
  INFO("outlier " << counts[0] << ", cusum " << counts[1] << ", bocpd " << counts[3] << ", tied rows " << ties);
  CHECK(std::max_element(counts.begin(), counts.end()) - counts.begin() == 0);
}
