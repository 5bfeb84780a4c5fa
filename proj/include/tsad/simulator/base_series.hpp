#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsad/core/decompose.hpp"
#include "tsad/core/error.hpp"
#include "tsad/core/stats.hpp"
#include "tsad/core/time_series.hpp"
#include "tsad/util/random.hpp"

namespace tsad {

enum class BaseKind { stl_mimic, trend_seasonal_noise, arima, iid_normal, iid_t };

constexpr std::string_view to_string(BaseKind k) noexcept {
  switch (k) {
    case BaseKind::stl_mimic: return "stl_mimic";
    case BaseKind::trend_seasonal_noise: return "trend_seasonal_noise";
    case BaseKind::arima: return "arima";
    case BaseKind::iid_normal: return "iid_normal";
    case BaseKind::iid_t: return "iid_t";
  }
  return "iid_normal";
}

inline BaseKind base_kind_from_string(std::string_view s) {
  for (auto k : {BaseKind::stl_mimic, BaseKind::trend_seasonal_noise, BaseKind::arima, BaseKind::iid_normal,
                 BaseKind::iid_t})
    if (to_string(k) == s) return k;
  fail(Errc::invalid_config, "unknown base series kind '" + std::string(s) + "'");
}

struct NormalDraw {
  double mean = 0.0;
  double sd = 0.0;
};

/// Generative model for one anomaly-free base series. Draws that are
/// magnitudes (seasonal amplitude, noise sd) use the absolute value of the
/// normal draw. The trend draw is the total linear change across the series.
struct BaseSeriesConfig {
  BaseKind kind = BaseKind::iid_normal;
  double length_mean = 450.0;
  int period = 7;
  NormalDraw trend{10.0, 5.0};
  NormalDraw seasonal{5.0, 3.0};
  NormalDraw noise{2.0, 2.0};
  int ar_order = 2;
  int ma_order = 2;
  std::vector<double> ar{0.1, 0.5};
  std::vector<double> ma{0.4, 0.1};
  double d_probability = 0.5;      ///< integration order d ~ Ber(d_probability)
  std::optional<int> d;            ///< fixes d when set
  double innovation_sd = 1.0;
  double iid_mean = 3.0;
  double iid_sd = 1.0;
  double t_df = 5.0;
  std::uint64_t seed = 0;

  void validate() const {
    auto bad = [](const std::string& m) { fail(Errc::invalid_config, m); };
    if (!(length_mean > 0.0)) bad("length_mean must be positive");
    if (trend.sd < 0 || seasonal.sd < 0 || noise.sd < 0 || iid_sd < 0 || innovation_sd < 0)
      bad("standard deviations must be non-negative");
    if (period < 1) bad("period must be positive");
    if (static_cast<int>(ar.size()) != ar_order || static_cast<int>(ma.size()) != ma_order)
      bad("ARIMA coefficient vectors must match the AR and MA orders");
    if (d_probability < 0.0 || d_probability > 1.0) bad("d_probability must lie in [0, 1]");
    if (d && *d != 0 && *d != 1) bad("d must be 0 or 1");
    if (!(t_df > 0.0)) bad("t degrees of freedom must be positive");
  }
};

inline constexpr std::size_t kMinBaseLength = 50;

/// Draws one base series; the length is Poisson(length_mean) with a floor of 50.
inline TimeSeries generate_base(const BaseSeriesConfig& config) {
  config.validate();
  if (config.kind == BaseKind::stl_mimic)
    fail(Errc::invalid_config, "stl_mimic needs an input series; use mimic() instead of generate_base()");
  Rng rng(config.seed);
  const std::size_t n =
      std::max<std::size_t>(kMinBaseLength, std::poisson_distribution<long long>(config.length_mean)(rng));
  std::vector<double> x(n, 0.0);
  std::normal_distribution<double> unit(0.0, 1.0);
  auto draw = [&](const NormalDraw& d) { return d.mean + d.sd * unit(rng); };

  switch (config.kind) {
    case BaseKind::trend_seasonal_noise: {
      const double rise = draw(config.trend);
      const double amplitude = std::abs(draw(config.seasonal));
      const double noise_sd = std::abs(draw(config.noise));
      const double span_len = static_cast<double>(std::max<std::size_t>(n - 1, 1));
      for (std::size_t t = 0; t < n; ++t) {
        const double tt = static_cast<double>(t);
        x[t] = rise * tt / span_len + amplitude * std::sin(2.0 * std::numbers::pi * tt / config.period) +
               noise_sd * unit(rng);
      }
      break;
    }
    case BaseKind::arima: {
      const int d = config.d ? *config.d : (std::bernoulli_distribution(config.d_probability)(rng) ? 1 : 0);
      const std::size_t burn = 200;
      std::vector<double> y(n + burn, 0.0);
      std::vector<double> e(n + burn, 0.0);
      for (std::size_t t = 0; t < y.size(); ++t) {
        e[t] = config.innovation_sd * unit(rng);
        double v = e[t];
        for (int i = 0; i < config.ar_order; ++i)
          if (t >= static_cast<std::size_t>(i + 1)) v += config.ar[i] * y[t - i - 1];
        for (int j = 0; j < config.ma_order; ++j)
          if (t >= static_cast<std::size_t>(j + 1)) v += config.ma[j] * e[t - j - 1];
        y[t] = v;
      }
      double level = 0.0;
      for (std::size_t t = 0; t < n; ++t) {
        const double v = y[t + burn];
        level = d == 1 ? level + v : v;
        x[t] = level;
      }
      break;
    }
    case BaseKind::iid_normal:
      for (double& v : x) v = config.iid_mean + config.iid_sd * unit(rng);
      break;
    case BaseKind::iid_t: {
      std::student_t_distribution<double> td(config.t_df);
      for (double& v : x) v = config.iid_mean + config.iid_sd * td(rng);
      break;
    }
    case BaseKind::stl_mimic: break;
  }
  return TimeSeries::from_values(std::move(x), config.period);
}

/// Anomaly-free look-alike: the input's seasonal profile plus iid Normal noise
/// matching the mean and sd of its decomposition residual. Trend (where
/// level and trend anomalies live) and the residual itself are not copied.
inline TimeSeries mimic(const TimeSeries& series, int period, std::uint64_t seed) {
  const Decomposition d = decompose(series, period);
  const double mu = stats::mean(d.residual);
  const double sd = stats::stddev(d.residual);
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> out(series.size());
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = d.seasonal[t] + mu + sd * noise(rng);
  return series.with_values(std::move(out)).with_period_hint(period);
}

/// The 18-series synthetic mix: 10 trend + weekly seasonality + noise, 5
/// ARIMA(2, d, 2), 2 iid N(3, 1), 1 iid t_5(3, 1); lengths ~ Poisson(450).
inline std::vector<BaseSeriesConfig> synthetic_preset(std::uint64_t seed) {
  std::vector<BaseSeriesConfig> out;
  auto add = [&](BaseKind kind, int count) {
    for (int i = 0; i < count; ++i) {
      BaseSeriesConfig c;
      c.kind = kind;
      c.seed = derive_seed(seed, {0xba5e, out.size()});
      out.push_back(c);
    }
  };
  add(BaseKind::trend_seasonal_noise, 10);
  add(BaseKind::arima, 5);
  add(BaseKind::iid_normal, 2);
  add(BaseKind::iid_t, 1);
  return out;
}

inline nlohmann::json base_config_json(const BaseSeriesConfig& c) {
  nlohmann::json j{{"kind", std::string(to_string(c.kind))},
                   {"length_mean", c.length_mean},
                   {"period", c.period},
                   {"trend", {c.trend.mean, c.trend.sd}},
                   {"seasonal", {c.seasonal.mean, c.seasonal.sd}},
                   {"noise", {c.noise.mean, c.noise.sd}},
                   {"ar_order", c.ar_order},
                   {"ma_order", c.ma_order},
                   {"ar", c.ar},
                   {"ma", c.ma},
                   {"d_probability", c.d_probability},
                   {"innovation_sd", c.innovation_sd},
                   {"iid_mean", c.iid_mean},
                   {"iid_sd", c.iid_sd},
                   {"t_df", c.t_df},
                   {"seed", c.seed}};
  if (c.d) j["d"] = *c.d;
  return j;
}

inline BaseSeriesConfig base_config_from_json(const nlohmann::json& j) {
  BaseSeriesConfig c;
  try {
    if (j.contains("kind")) c.kind = base_kind_from_string(j.at("kind").get<std::string>());
    auto pair = [&](const char* key, NormalDraw& d) {
      if (j.contains(key)) {
        d.mean = j.at(key).at(0).get<double>();
        d.sd = j.at(key).at(1).get<double>();
      }
    };
    pair("trend", c.trend);
    pair("seasonal", c.seasonal);
    pair("noise", c.noise);
    c.length_mean = j.value("length_mean", c.length_mean);
    c.period = j.value("period", c.period);
    c.ar = j.value("ar", c.ar);
    c.ma = j.value("ma", c.ma);
    c.ar_order = j.value("ar_order", static_cast<int>(c.ar.size()));
    c.ma_order = j.value("ma_order", static_cast<int>(c.ma.size()));
    c.d_probability = j.value("d_probability", c.d_probability);
    if (j.contains("d")) c.d = j.at("d").get<int>();
    c.innovation_sd = j.value("innovation_sd", c.innovation_sd);
    c.iid_mean = j.value("iid_mean", c.iid_mean);
    c.iid_sd = j.value("iid_sd", c.iid_sd);
    c.t_df = j.value("t_df", c.t_df);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::invalid_config, std::string("base series config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace tsad
