#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "tsad/automl/training.hpp"
#include "tsad/features/extract.hpp"

using namespace tsad;
using Catch::Matchers::WithinAbs;

namespace {

std::vector<double> gaussian(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = z(rng);
  return v;
}

}  // namespace

TEST_CASE("iid noise has weak trend and seasonality", "[features]") {
  double trend = 0.0;
  double season = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto f = extract(gaussian(400, seed), 7);
    trend += f.get("trend_strength") / 50;
    season += f.get("seasonality_strength") / 50;
  }
  // a 7-point moving average keeps 1/7 of white-noise variance in the trend
  CHECK(trend < 0.2);
  CHECK_THAT(trend, WithinAbs(1.0 / 7.0, 0.03));
  CHECK(season < 0.2);
}

TEST_CASE("pure sine is strongly seasonal", "[features]") {
  std::vector<double> v(140);
  for (std::size_t t = 0; t < v.size(); ++t) v[t] = std::sin(2 * std::numbers::pi * double(t) / 7.0);
  CHECK(extract(v, 7).get("seasonality_strength") > 0.95);
}

TEST_CASE("constant series imputes degenerate features", "[features]") {
  const auto f = extract(std::vector<double>(60, 3.0), 7);
  CHECK(f.get("acf1") == 0.0);
  CHECK(f.get("variance") == 0.0);
  CHECK(f.get("mean") == 3.0);
  CHECK(f.get("hurst") == 0.5);
  for (double v : f.values) CHECK(std::isfinite(v));
}

TEST_CASE("alternating series has lag-one autocorrelation near -1", "[features]") {
  std::vector<double> v(100);
  for (std::size_t t = 0; t < v.size(); ++t) v[t] = t % 2 ? -1.0 : 1.0;
  const auto f = extract(v, 7);
  // textbook sample ACF gives -(n-1)/n
  CHECK_THAT(f.get("acf1"), WithinAbs(oracle::acf(v, 1), 1e-12));
  CHECK_THAT(f.get("acf1"), WithinAbs(-1.0, 0.05));
}

TEST_CASE("simple moments against direct formulas", "[features]") {
  const auto v = gaussian(300, 5);
  const auto f = extract(v, 7);
  CHECK(f.get("length") == 300.0);
  CHECK_THAT(f.get("mean"), WithinAbs(stats::mean(v), 1e-12));
  CHECK_THAT(f.get("variance"), WithinAbs(stats::variance(v), 1e-12));
  CHECK_THAT(f.get("acf1"), WithinAbs(oracle::acf(v, 1), 1e-12));
  CHECK_THAT(f.get("seasonal_acf1"), WithinAbs(oracle::acf(v, 7), 1e-12));
  double crossings = 0;
  const double med = stats::median(v);
  for (std::size_t i = 1; i < v.size(); ++i) crossings += (v[i - 1] <= med) != (v[i] <= med);
  CHECK(f.get("crossing_points") == crossings);
}

TEST_CASE("features other than mean ignore a constant shift", "[features]") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto v = gaussian(250, seed);
    for (std::size_t t = 0; t < v.size(); ++t) v[t] += 0.02 * double(t) + std::cos(double(t));
    auto w = v;
    for (double& x : w) x += 123.5;
    const auto a = extract(v, 7);
    const auto b = extract(w, 7);
    for (std::size_t j = 0; j < kNumFeatures; ++j) {
      if (kFeatureNames[j] == "mean") continue;
      INFO(kFeatureNames[j]);
      CHECK_THAT(b.values[j], WithinAbs(a.values[j], 1e-6 * (1 + std::abs(a.values[j]))));
    }
  }
}

TEST_CASE("schema and errors", "[features]") {
  CHECK(kFeatureNames.size() == kNumFeatures);
  CHECK_THROWS_AS(extract(std::vector<double>(19, 1.0), 7), Error);
  // too short to decompose: falls back to a straight-line trend
  const auto f = extract(gaussian(25, 3), 24);
  CHECK(f.values.size() == kNumFeatures);
  for (double v : f.values) CHECK(std::isfinite(v));
  CHECK_THROWS_AS(f.get("nope"), Error);
  const auto s = TimeSeries::from_values(gaussian(100, 4));
  CHECK(extract(s) == extract(s.values(), 7));
}

TEST_CASE("feature matrix csv round trip", "[features]") {
  std::vector<FeatureVector> rows;
  for (std::uint64_t seed = 0; seed < 5; ++seed) rows.push_back(extract(gaussian(80, seed), 7));
  std::stringstream buf;
  write_feature_matrix(buf, rows);
  CHECK(buf.str().rfind("# schema=1\nlength,mean,", 0) == 0);
  const auto back = read_feature_matrix(buf);
  CHECK(back == rows);

  std::stringstream old("# schema=0\n");
  CHECK_THROWS_AS(read_feature_matrix(old), Error);
}
