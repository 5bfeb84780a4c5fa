#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "oracles.hpp"
#include "tsad/automl/training.hpp"
#include "tsad/detectors/detect.hpp"
#include "tsad/evaluation/evaluate.hpp"
#include "tsad/features/extract.hpp"
#include "tsad/simulator/base_series.hpp"
#include "tsad/simulator/corpus.hpp"

using namespace tsad;

namespace {

std::vector<double> process(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> v(n);
  double level = 0;
  for (std::size_t t = 0; t < n; ++t) {
    if (t % 97 == 50) level += 3 * z(rng);
    v[t] = level + std::sin(2 * std::numbers::pi * double(t) / 7.0) + z(rng);
  }
  return v;
}

std::vector<double> affine(std::vector<double> v, double k, double c) {
  for (double& x : v) x = k * x + c;
  return v;
}

void same_scores(const ScoreSeries& a, const ScoreSeries& b) {
  REQUIRE(a.size() == b.size());
  for (std::size_t t = 0; t < a.size(); ++t) {
    INFO("t = " << t);
    CHECK(std::abs(a[t] - b[t]) <= 1e-9 * (1 + std::abs(a[t])));
  }
}

std::vector<std::size_t> random_set(Rng& rng, std::size_t max_size, std::size_t hi) {
  std::uniform_int_distribution<std::size_t> size(0, max_size);
  std::uniform_int_distribution<std::size_t> pos(0, hi);
  std::set<std::size_t> s;
  const auto k = size(rng);
  while (s.size() < k) s.insert(pos(rng));
  return {s.begin(), s.end()};
}

}  // namespace

TEST_CASE("centered detectors ignore a constant shift", "[properties][detectors]") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto v = process(300, seed);
    const auto a = TimeSeries::from_values(v);
    const auto b = TimeSeries::from_values(affine(v, 1.0, 3.25));
    for (bool season : {true, false}) {
      same_scores(run_cusum(a, {.remove_seasonality = season}), run_cusum(b, {.remove_seasonality = season}));
      same_scores(run_mk(a, {.remove_seasonality = season}), run_mk(b, {.remove_seasonality = season}));
    }
    same_scores(run_statsig(a, {}), run_statsig(b, {}));
  }
}

TEST_CASE("cusum and mk ignore a positive rescale", "[properties][detectors]") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto v = process(300, 10 + seed);
    const auto a = TimeSeries::from_values(v);
    for (double k : {0.5, 2.5, 8.0}) {
      const auto b = TimeSeries::from_values(affine(v, k, 0.0));
      same_scores(run_cusum(a, {}), run_cusum(b, {}));
      same_scores(run_mk(a, {}), run_mk(b, {}));
    }
  }
}

TEST_CASE("every detector keeps the input length", "[properties][detectors]") {
  Rng rng(4);
  for (std::size_t n : {20u, 57u, 200u}) {
    const auto s = TimeSeries::from_values(process(n, n));
    for (DetectorId id : kAllDetectors)
      for (int k = 0; k < 3; ++k) {
        ScoreSeries sc;
        try {
          sc = score(s, DetectorSpec{sample_params(id, rng)});
        } catch (const Error& e) {
          // windows longer than the series are refused, not truncated
          CHECK(e.code() == Errc::series_too_short);
          continue;
        }
        CHECK(sc.size() == n);
        for (double v : sc) CHECK(std::isfinite(v));
      }
  }
}

TEST_CASE("rolling mk matches enumeration on all small windows", "[properties][mk]") {
  // every sequence over {1,2,3} of length up to 8
  for (std::size_t len = 2; len <= 8; ++len) {
    std::size_t total = 1;
    for (std::size_t i = 0; i < len; ++i) total *= 3;
    for (std::size_t code = 0; code < total; ++code) {
      std::vector<double> x(len);
      std::size_t c = code;
      for (auto& v : x) {
        v = double(1 + c % 3);
        c /= 3;
      }
      const auto s = rolling_mann_kendall_s(x, len);
      REQUIRE(s.size() == len);
      CHECK(s[len - 1] == double(oracle::mk_s(x)));
    }
  }
  // shorter windows slide over a longer sequence
  Rng rng(1);
  std::uniform_int_distribution<int> d(1, 3);
  std::vector<double> x(60);
  for (double& v : x) v = d(rng);
  for (std::size_t w = 2; w <= 8; ++w) {
    const auto s = rolling_mann_kendall_s(x, w);
    for (std::size_t t = w - 1; t < x.size(); ++t)
      CHECK(s[t] == double(oracle::mk_s(std::vector<double>(x.begin() + long(t + 1 - w), x.begin() + long(t + 1)))));
  }
}

TEST_CASE("raising the upper threshold only removes flags", "[properties][changepoints]") {
  Rng rng(5);
  std::normal_distribution<double> z(0.0, 2.0);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> sc(80);
    for (double& v : sc) v = z(rng);
    const double lo = std::abs(z(rng));
    const double hi = lo + std::abs(z(rng));
    const auto fa = flagged_indices(sc, Thresholds::symmetric(lo));
    const auto fb = flagged_indices(sc, Thresholds{hi, -lo});
    const std::set<std::size_t> sa(fa.begin(), fa.end());
    for (auto i : fb) CHECK(sa.count(i) == 1);
    for (std::size_t m : {1u, 3u, 6u}) {
      const auto ca = to_changepoints(sc, Thresholds::symmetric(lo), m);
      const auto cb = to_changepoints(sc, Thresholds{hi, -lo}, m);
      // each surviving detection sits inside a flagged run of the lower threshold
      for (auto c : cb) CHECK(sa.count(c) == 1);
      CHECK(std::is_sorted(ca.begin(), ca.end()));
    }
  }
}

TEST_CASE("matching is symmetric and monotone in the margin", "[properties][evaluation]") {
  Rng rng(6);
  for (int rep = 0; rep < 3000; ++rep) {
    const auto g = random_set(rng, 12, 150);
    const auto c = random_set(rng, 12, 150);
    std::size_t prev = 0;
    for (std::size_t m = 1; m <= 15; ++m) {
      const auto ab = match(g, c, m).tp.size();
      CHECK(ab == match(c, g, m).tp.size());
      CHECK(ab >= prev);
      CHECK(ab <= std::min(g.size(), c.size()) + 1);
      prev = ab;
    }
    const auto e = evaluate(g, g, {5, 1.0});
    CHECK(e.precision == 1.0);
    CHECK(e.recall == 1.0);
    CHECK(e.f_score == 1.0);
    const auto r = evaluate(g, c, {5, 1.0});
    CHECK(r.f_score >= 0.0);
    CHECK(r.f_score <= 1.0);
  }
}

TEST_CASE("bocpd posterior rows are distributions", "[properties][bocpd]") {
  Rng rng(7);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u(-5, 5);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> v(60);
    double mu = u(rng);
    for (std::size_t t = 0; t < v.size(); ++t) {
      if (t == 30) mu = u(rng);
      v[t] = mu + (1 + rep % 3) * z(rng);
    }
    const auto r = run_bocpd(TimeSeries::from_values(v), {}, true);
    for (const auto& row : r.posterior.rows) {
      double s = 0;
      for (double p : row) {
        CHECK(p >= 0.0);
        s += p;
      }
      worst = std::max(worst, std::abs(s - 1));
    }
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("simulator output is a pure function of config and seed", "[properties][simulator]") {
  for (const auto& c : synthetic_preset(3)) {
    CHECK(generate_base(c) == generate_base(c));
    const auto base = generate_base(c);
    InjectionConfig inj;
    inj.seed = c.seed;
    for (AnomalyKind k : {AnomalyKind::spike, AnomalyKind::level_shift, AnomalyKind::trend_shift}) {
      const auto a = inject(base, k, inj);
      const auto b = inject(base, k, inj);
      CHECK(a.series == b.series);
      CHECK(a.labels == b.labels);
      CHECK(a.kind == k);
      CHECK(a.series.size() == base.size());
      for (std::size_t i = 1; i < a.labels.size(); ++i) CHECK(a.labels[i] > a.labels[i - 1]);
    }
  }
}

TEST_CASE("more search draws never lower the best score", "[properties][search]") {
  const AnomalyKind kinds[] = {AnomalyKind::spike, AnomalyKind::level_shift, AnomalyKind::trend_shift};
  std::vector<LabeledSeries> data;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    BaseSeriesConfig c;
    c.kind = BaseKind::trend_seasonal_noise;
    c.length_mean = 150;
    c.seed = seed;
    InjectionConfig inj;
    inj.seed = seed;
    inj.tau_dist = 40;
    data.push_back(inject(generate_base(c), kinds[seed % 3], inj));
  }
  for (DetectorId id : kAllDetectors) {
    double small = 0, big = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto fs = best_params_for(data[i], id, {5, i}, {5, 1.0}).second;
      const auto fb = best_params_for(data[i], id, {40, i}, {5, 1.0}).second;
      CHECK(fb >= fs);
      small += fs;
      big += fb;
    }
    INFO(to_string(id));
    CHECK(big >= small);
  }
}

TEST_CASE("feature vectors keep the schema length", "[properties][features]") {
  Rng rng(8);
  std::uniform_int_distribution<std::size_t> len(20, 600);
  for (int rep = 0; rep < 40; ++rep) {
    const auto v = process(len(rng), 100 + rep);
    const auto f = extract(v, 7);
    CHECK(f.values.size() == kNumFeatures);
    CHECK(f.schema_version == kFeatureSchemaVersion);
    for (double x : f.values) CHECK(std::isfinite(x));
  }
}

TEST_CASE("sampled and serialized params stay in the registry", "[properties][registry]") {
  Rng rng(9);
  for (DetectorId id : kAllDetectors)
    for (int k = 0; k < 200; ++k) {
      const auto p = sample_params(id, rng);
      CHECK(within_space(p));
      CHECK(params_from_values(id, params_to_values(p)) == p);
      CHECK(params_from_json(id, params_to_json(p)) == p);
    }
}
