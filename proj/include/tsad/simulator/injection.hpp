#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
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

struct SpikeConfig {
  double p_spike = 0.9;  ///< P(S = 1); S = 1 gives a downward spike
  double mu = 20.0;      ///< mean spike z-score
  double sigma = 1.0;
};

enum class LevelMode { alternating, bernoulli };

struct LevelConfig {
  LevelMode mode = LevelMode::alternating;
  double p_level = 0.5;
  double mu0 = 2.0;  ///< centre of the first segment's level draw
  double sigma_mu = 1.0;
  std::optional<double> sigma_l;  ///< within-segment sd; default: residual sd of the input
};

struct TrendConfig {
  double beta0 = 8.0;  ///< centre of the first segment's slope draw (per sample)
  double sigma_beta = 1.0;
  std::optional<double> sigma_t;  ///< noise sd around the line; default: residual sd of the input
};

struct InjectionConfig {
  double tau_dist = 100.0;  ///< mean gap between anomalies
  SpikeConfig spike;
  LevelConfig level;
  TrendConfig trend;
  std::uint64_t seed = 0;

  void validate() const {
    auto bad = [](const std::string& m) { fail(Errc::invalid_config, m); };
    if (!(tau_dist >= 2.0)) bad("tau_dist must be >= 2");
    auto prob = [&](double p, const char* name) {
      if (!(p >= 0.0 && p <= 1.0)) bad(std::string(name) + " must lie in [0, 1]");
    };
    prob(spike.p_spike, "p_spike");
    prob(level.p_level, "p_level");
    if (spike.sigma < 0 || level.sigma_mu < 0 || trend.sigma_beta < 0 || (level.sigma_l && *level.sigma_l < 0) ||
        (trend.sigma_t && *trend.sigma_t < 0))
      bad("sigma parameters must be non-negative");
  }
};

/// Sampled anomaly locations with their per-location (spike) or
/// per-segment (level, trend) draws.
///   spike:  signs[s] = S_spike, magnitudes[s] = Z_spike   (one per location)
///   level:  magnitudes[s] = mu_s                           (locations + 1 segments)
///   trend:  magnitudes[s] = beta_s                         (locations + 1 segments)
/// Segment s covers [locations[s-1], locations[s]) with an implicit 0 and n
/// at the ends.
struct ChangepointPlan {
  AnomalyKind kind = AnomalyKind::spike;
  std::vector<std::size_t> locations;
  std::vector<int> signs;
  std::vector<double> magnitudes;
};

/// Gaps ~ Geometric(1 / tau_dist) on {1, 2, ...}, accumulated from 0 while
/// the location stays below `length`.
inline std::vector<std::size_t> sample_locations(std::size_t length, double tau_dist, Rng& rng) {
  std::vector<std::size_t> out;
  if (length == 0) return out;
  std::geometric_distribution<long long> gap(1.0 / tau_dist);
  std::size_t pos = 0;
  while (true) {
    pos += static_cast<std::size_t>(gap(rng)) + 1;
    if (pos >= length) break;
    out.push_back(pos);
  }
  return out;
}

inline std::vector<std::size_t> sample_locations(std::size_t length, double tau_dist, std::uint64_t seed) {
  Rng rng(seed);
  return sample_locations(length, tau_dist, rng);
}

namespace injection_detail {

// Seasonal profile and residual sd of a series; zero seasonality when the
// series is too short to decompose.
struct SeasonalSplit {
  std::vector<double> seasonal;
  double residual_sd = 0.0;
};

inline SeasonalSplit split(const TimeSeries& series) {
  SeasonalSplit s;
  const int period = resolve_period(series);
  if (period >= 2 && series.size() >= 2 * static_cast<std::size_t>(period)) {
    const Decomposition d = decompose(series, period);
    s.seasonal = d.seasonal;
    s.residual_sd = stats::stddev(d.residual);
  } else {
    s.seasonal.assign(series.size(), 0.0);
    s.residual_sd = stats::stddev(series.values());
  }
  return s;
}

inline std::vector<std::size_t> segment_index(std::size_t n, const std::vector<std::size_t>& locations) {
  std::vector<std::size_t> seg(n, 0);
  std::size_t s = 0;
  for (std::size_t t = 0; t < n; ++t) {
    while (s < locations.size() && t >= locations[s]) ++s;
    seg[t] = s;
  }
  return seg;
}

}  // namespace injection_detail

inline ChangepointPlan plan_spikes(std::size_t length, const InjectionConfig& config, Rng& rng) {
  ChangepointPlan plan;
  plan.kind = AnomalyKind::spike;
  plan.locations = sample_locations(length, config.tau_dist, rng);
  std::bernoulli_distribution sign(config.spike.p_spike);
  std::normal_distribution<double> z(config.spike.mu, config.spike.sigma);
  for (std::size_t s = 0; s < plan.locations.size(); ++s) {
    plan.signs.push_back(sign(rng) ? 1 : 0);
    plan.magnitudes.push_back(z(rng));
  }
  return plan;
}

/// x[tau_s] += (-1)^S[s] |Z[s]| sigma_hat, sigma_hat = sample sd of the series.
inline LabeledSeries apply_spikes(const TimeSeries& series, const ChangepointPlan& plan) {
  const double sigma = std::max(stats::stddev(series.values()), 1e-8);
  std::vector<double> x(series.values().begin(), series.values().end());
  for (std::size_t s = 0; s < plan.locations.size(); ++s) {
    const double dir = plan.signs[s] % 2 == 0 ? 1.0 : -1.0;
    x[plan.locations[s]] += dir * std::abs(plan.magnitudes[s]) * sigma;
  }
  return LabeledSeries(series.with_values(std::move(x)), plan.locations, AnomalyKind::spike);
}

/// Segment levels mu_s = sign_s |N(mu_{s-1}, sigma_mu)| with mu_{-1} = mu0;
/// sign_s = (-1)^s when alternating, (-1)^S_level[s] with S_level ~ Ber(p_level) otherwise.
inline ChangepointPlan plan_level_shifts(std::size_t length, const InjectionConfig& config, Rng& rng) {
  ChangepointPlan plan;
  plan.kind = AnomalyKind::level_shift;
  plan.locations = sample_locations(length, config.tau_dist, rng);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::bernoulli_distribution flip(config.level.p_level);
  double prev = config.level.mu0;
  for (std::size_t s = 0; s <= plan.locations.size(); ++s) {
    const int sign_bit = config.level.mode == LevelMode::alternating ? static_cast<int>(s % 2) : (flip(rng) ? 1 : 0);
    const double mag = std::abs(prev + config.level.sigma_mu * unit(rng));
    const double mu = sign_bit == 0 ? mag : -mag;
    plan.signs.push_back(sign_bit);
    plan.magnitudes.push_back(mu);
    prev = mu;
  }
  return plan;
}

/// Deseasonalized values are replaced by N(mu_s, sigma_L) within each
/// segment; the input's seasonal profile is added back.
inline LabeledSeries apply_level_shifts(const TimeSeries& series, const ChangepointPlan& plan,
                                        std::optional<double> sigma_l, Rng& rng) {
  const auto split = injection_detail::split(series);
  const double sd = sigma_l.value_or(split.residual_sd);
  const auto seg = injection_detail::segment_index(series.size(), plan.locations);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<double> x(series.size());
  for (std::size_t t = 0; t < x.size(); ++t) x[t] = split.seasonal[t] + plan.magnitudes[seg[t]] + sd * unit(rng);
  return LabeledSeries(series.with_values(std::move(x)), plan.locations, AnomalyKind::level_shift);
}

/// Segment slopes beta_s = (-1)^s |N(beta_{s-1}, sigma_beta)| with beta_{-1} = beta0.
inline ChangepointPlan plan_trend_shifts(std::size_t length, const InjectionConfig& config, Rng& rng) {
  ChangepointPlan plan;
  plan.kind = AnomalyKind::trend_shift;
  plan.locations = sample_locations(length, config.tau_dist, rng);
  std::normal_distribution<double> unit(0.0, 1.0);
  double prev = config.trend.beta0;
  for (std::size_t s = 0; s <= plan.locations.size(); ++s) {
    const double mag = std::abs(prev + config.trend.sigma_beta * unit(rng));
    const double beta = s % 2 == 0 ? mag : -mag;
    plan.signs.push_back(static_cast<int>(s % 2));
    plan.magnitudes.push_back(beta);
    prev = beta;
  }
  return plan;
}

/// Continuous piecewise-linear mean starting at 0: each segment starts where
/// the previous one ended. Gaussian noise sigma_T and the input's seasonal
/// profile are added.
inline LabeledSeries apply_trend_shifts(const TimeSeries& series, const ChangepointPlan& plan,
                                        std::optional<double> sigma_t, Rng& rng) {
  const auto split = injection_detail::split(series);
  const double sd = sigma_t.value_or(split.residual_sd);
  const auto seg = injection_detail::segment_index(series.size(), plan.locations);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<double> x(series.size());
  double anchor = 0.0;
  std::size_t start = 0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    if (t > 0 && seg[t] != seg[t - 1]) {
      anchor += plan.magnitudes[seg[t - 1]] * static_cast<double>(t - start);
      start = t;
    }
    const double mean = anchor + plan.magnitudes[seg[t]] * static_cast<double>(t - start);
    x[t] = split.seasonal[t] + mean + sd * unit(rng);
  }
  return LabeledSeries(series.with_values(std::move(x)), plan.locations, AnomalyKind::trend_shift);
}

inline LabeledSeries inject_spikes(const TimeSeries& series, const InjectionConfig& config) {
  config.validate();
  Rng rng(config.seed);
  return apply_spikes(series, plan_spikes(series.size(), config, rng));
}

inline LabeledSeries inject_level_shifts(const TimeSeries& series, const InjectionConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const auto plan = plan_level_shifts(series.size(), config, rng);
  return apply_level_shifts(series, plan, config.level.sigma_l, rng);
}

inline LabeledSeries inject_trend_shifts(const TimeSeries& series, const InjectionConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const auto plan = plan_trend_shifts(series.size(), config, rng);
  return apply_trend_shifts(series, plan, config.trend.sigma_t, rng);
}

inline LabeledSeries inject(const TimeSeries& series, AnomalyKind kind, const InjectionConfig& config) {
  switch (kind) {
    case AnomalyKind::spike: return inject_spikes(series, config);
    case AnomalyKind::level_shift: return inject_level_shifts(series, config);
    case AnomalyKind::trend_shift: return inject_trend_shifts(series, config);
    default: break;
  }
  fail(Errc::invalid_argument, "can only inject spike, level_shift or trend_shift anomalies");
}

inline nlohmann::json injection_json(const InjectionConfig& c) {
  nlohmann::json j{
      {"tau_dist", c.tau_dist},
      {"spike", {{"p_spike", c.spike.p_spike}, {"mu", c.spike.mu}, {"sigma", c.spike.sigma}}},
      {"level",
       {{"mode", c.level.mode == LevelMode::alternating ? "alternating" : "bernoulli"},
        {"p_level", c.level.p_level},
        {"mu0", c.level.mu0},
        {"sigma_mu", c.level.sigma_mu}}},
      {"trend", {{"beta0", c.trend.beta0}, {"sigma_beta", c.trend.sigma_beta}}},
      {"seed", c.seed},
  };
  if (c.level.sigma_l) j["level"]["sigma_l"] = *c.level.sigma_l;
  if (c.trend.sigma_t) j["trend"]["sigma_t"] = *c.trend.sigma_t;
  return j;
}

inline InjectionConfig injection_from_json(const nlohmann::json& j) {
  InjectionConfig c;
  try {
    c.tau_dist = j.value("tau_dist", c.tau_dist);
    c.seed = j.value("seed", c.seed);
    if (j.contains("spike")) {
      const auto& s = j.at("spike");
      c.spike.p_spike = s.value("p_spike", c.spike.p_spike);
      c.spike.mu = s.value("mu", c.spike.mu);
      c.spike.sigma = s.value("sigma", c.spike.sigma);
    }
    if (j.contains("level")) {
      const auto& l = j.at("level");
      const std::string mode = l.value("mode", std::string("alternating"));
      if (mode != "alternating" && mode != "bernoulli") fail(Errc::invalid_config, "level mode '" + mode + "'");
      c.level.mode = mode == "alternating" ? LevelMode::alternating : LevelMode::bernoulli;
      c.level.p_level = l.value("p_level", c.level.p_level);
      c.level.mu0 = l.value("mu0", c.level.mu0);
      c.level.sigma_mu = l.value("sigma_mu", c.level.sigma_mu);
      if (l.contains("sigma_l")) c.level.sigma_l = l.at("sigma_l").get<double>();
    }
    if (j.contains("trend")) {
      const auto& t = j.at("trend");
      c.trend.beta0 = t.value("beta0", c.trend.beta0);
      c.trend.sigma_beta = t.value("sigma_beta", c.trend.sigma_beta);
      if (t.contains("sigma_t")) c.trend.sigma_t = t.at("sigma_t").get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::invalid_config, std::string("injection config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace tsad
