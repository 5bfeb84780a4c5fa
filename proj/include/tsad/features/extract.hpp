#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tsad/core/decompose.hpp"
#include "tsad/core/error.hpp"
#include "tsad/core/stats.hpp"
#include "tsad/core/time_series.hpp"

namespace tsad {

inline constexpr int kFeatureSchemaVersion = 1;
inline constexpr std::size_t kNumFeatures = 24;

// Feature catalog, schema 1. Unless noted, features are computed on the raw
// values x; "scaled" means (x - mean) / sd.
//   length                 n
//   mean, variance         sample moments (variance with n - 1)
//   skewness, kurtosis     m3 / m2^1.5 and m4 / m2^2 - 3 (0 for constant input)
//   trend_strength         max(0, 1 - Var(R) / Var(T + R))
//   seasonality_strength   max(0, 1 - Var(R) / Var(S + R))
//   spikiness              variance of leave-one-out variances of R / sd
//   linearity, curvature   projections of T / sd on orthonormal degree 1 and 2 polynomials
//   acf1, acf10_sumsq      lag-1 ACF and sum of squared ACF at lags 1..10
//   diff1_acf1, diff2_acf1 lag-1 ACF of first and second differences
//   pacf5_sumsq            sum of squared partial autocorrelations at lags 1..5
//   seasonal_acf1          ACF at the seasonal lag
//   entropy_spectral       normalized Shannon entropy of the periodogram
//   hurst                  rescaled-range exponent (0.5 when n < 32 or constant)
//   stability, lumpiness   variance of tiled means / variances (width 10) of the scaled series
//   flat_spots             longest run within one of 10 equal-width value bins
//   crossing_points        number of median crossings
//   std_first_diff         sd of first differences
//   cusum_range            range of the cumulative sum of centered x / (sd * n)
// T, S, R are the components of decompose(x, period); when the series is too
// short for that, S = 0 and T is the least-squares line.
inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "length",         "mean",           "variance",     "skewness",       "kurtosis",      "trend_strength",
    "seasonality_strength", "spikiness", "linearity",   "curvature",      "acf1",          "acf10_sumsq",
    "diff1_acf1",     "diff2_acf1",     "pacf5_sumsq",  "seasonal_acf1",  "entropy_spectral", "hurst",
    "stability",      "lumpiness",      "flat_spots",   "crossing_points", "std_first_diff", "cusum_range",
};

struct FeatureVector {
  std::array<double, kNumFeatures> values{};
  int schema_version = kFeatureSchemaVersion;

  double operator[](std::size_t i) const { return values[i]; }
  [[nodiscard]] double get(std::string_view name) const {
    for (std::size_t i = 0; i < kNumFeatures; ++i)
      if (kFeatureNames[i] == name) return values[i];
    fail(Errc::invalid_argument, "unknown feature '" + std::string(name) + "'");
  }
  [[nodiscard]] std::span<const double> span() const noexcept { return values; }
  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

namespace features_detail {

inline double central_moment(std::span<const double> x, double m, int k) {
  double acc = 0.0;
  for (double v : x) acc += std::pow(v - m, k);
  return acc / static_cast<double>(x.size());
}

inline std::vector<double> pacf(std::span<const double> x, std::size_t max_lag) {
  std::vector<double> r(max_lag + 1);
  for (std::size_t k = 0; k <= max_lag; ++k) r[k] = k == 0 ? 1.0 : stats::acf(x, k);
  std::vector<double> out(max_lag, 0.0);
  std::vector<double> phi(max_lag + 1, 0.0);
  std::vector<double> prev(max_lag + 1, 0.0);
  double v = 1.0;
  for (std::size_t k = 1; k <= max_lag; ++k) {
    double num = r[k];
    for (std::size_t j = 1; j < k; ++j) num -= prev[j] * r[k - j];
    if (std::abs(v) < 1e-12) break;
    const double a = num / v;
    phi[k] = a;
    for (std::size_t j = 1; j < k; ++j) phi[j] = prev[j] - a * prev[k - j];
    v *= (1.0 - a * a);
    out[k - 1] = a;
    prev = phi;
  }
  return out;
}

inline double spectral_entropy(std::span<const double> x) {
  const std::size_t n = x.size();
  const double m = stats::mean(x);
  const std::size_t kmax = n / 2;
  std::vector<double> power;
  power.reserve(kmax);
  double total = 0.0;
  for (std::size_t k = 1; k <= kmax; ++k) {
    std::complex<double> acc{0.0, 0.0};
    const double w = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    for (std::size_t t = 0; t < n; ++t) acc += (x[t] - m) * std::polar(1.0, w * static_cast<double>(t));
    power.push_back(std::norm(acc));
    total += power.back();
  }
  if (total <= 0.0 || power.size() < 2) return 0.0;
  double h = 0.0;
  for (double p : power) {
    const double q = p / total;
    if (q > 0.0) h -= q * std::log(q);
  }
  return h / std::log(static_cast<double>(power.size()));
}

inline double hurst_exponent(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 32 || stats::variance(x) <= 0.0) return 0.5;
  std::vector<double> log_size;
  std::vector<double> log_rs;
  for (std::size_t w = 8; w <= n / 2; w *= 2) {
    double rs_sum = 0.0;
    std::size_t count = 0;
    for (std::size_t start = 0; start + w <= n; start += w) {
      const auto seg = x.subspan(start, w);
      const double m = stats::mean(seg);
      const double sd = stats::stddev(seg, 0);
      if (sd <= 0.0) continue;
      double cum = 0.0;
      double lo = 0.0;
      double hi = 0.0;
      for (double v : seg) {
        cum += v - m;
        lo = std::min(lo, cum);
        hi = std::max(hi, cum);
      }
      rs_sum += (hi - lo) / sd;
      ++count;
    }
    if (count > 0 && rs_sum > 0.0) {
      log_size.push_back(std::log(static_cast<double>(w)));
      log_rs.push_back(std::log(rs_sum / static_cast<double>(count)));
    }
  }
  if (log_size.size() < 2) return 0.5;
  return detail::fit_line(log_size, log_rs).second;
}

inline std::pair<double, double> tiled_stability_lumpiness(std::span<const double> scaled, std::size_t width) {
  std::vector<double> means;
  std::vector<double> vars;
  for (std::size_t start = 0; start + width <= scaled.size(); start += width) {
    const auto seg = scaled.subspan(start, width);
    means.push_back(stats::mean(seg));
    vars.push_back(stats::variance(seg));
  }
  return {stats::variance(means), stats::variance(vars)};
}

inline double flat_spots(std::span<const double> x) {
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  if (range <= 0.0) return static_cast<double>(x.size());
  auto bin = [&](double v) { return std::min(9, static_cast<int>(std::floor(10.0 * (v - lo) / range))); };
  std::size_t best = 1;
  std::size_t run = 1;
  for (std::size_t i = 1; i < x.size(); ++i) {
    run = bin(x[i]) == bin(x[i - 1]) ? run + 1 : 1;
    best = std::max(best, run);
  }
  return static_cast<double>(best);
}

}  // namespace features_detail

/// Fixed-schema characteristics of a series; see the catalog above.
inline FeatureVector extract(std::span<const double> x, int period) {
  namespace fd = features_detail;
  const std::size_t n = x.size();
  if (n < 20) fail(Errc::series_too_short, "feature extraction needs at least 20 points, got " + std::to_string(n));

  Decomposition d;
  if (period >= 2 && n >= 2 * static_cast<std::size_t>(period)) {
    d = decompose(x, period);
  } else {
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<double>(i);
    const auto [a, b] = detail::fit_line(t, x);
    d.trend.resize(n);
    d.seasonal.assign(n, 0.0);
    d.residual.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      d.trend[i] = a + b * t[i];
      d.residual[i] = x[i] - d.trend[i];
    }
  }

  const double m = stats::mean(x);
  const double var = stats::variance(x);
  const double sd = std::sqrt(var);
  const double m2 = fd::central_moment(x, m, 2);
  std::vector<double> scaled(n, 0.0);
  if (sd > 0.0)
    for (std::size_t i = 0; i < n; ++i) scaled[i] = (x[i] - m) / sd;

  FeatureVector f;
  auto& v = f.values;
  v[0] = static_cast<double>(n);
  v[1] = m;
  v[2] = var;
  v[3] = m2 > 0.0 ? fd::central_moment(x, m, 3) / std::pow(m2, 1.5) : 0.0;
  v[4] = m2 > 0.0 ? fd::central_moment(x, m, 4) / (m2 * m2) - 3.0 : 0.0;

  std::vector<double> tr(n);
  std::vector<double> sr(n);
  for (std::size_t i = 0; i < n; ++i) {
    tr[i] = d.trend[i] + d.residual[i];
    sr[i] = d.seasonal[i] + d.residual[i];
  }
  const double var_r = stats::variance(d.residual);
  const double var_tr = stats::variance(tr);
  const double var_sr = stats::variance(sr);
  v[5] = var_tr > 0.0 ? std::max(0.0, 1.0 - var_r / var_tr) : 0.0;
  v[6] = var_sr > 0.0 ? std::max(0.0, 1.0 - var_r / var_sr) : 0.0;

  if (sd > 0.0 && n > 2) {
    double s1 = 0.0;
    double s2 = 0.0;
    for (double r : d.residual) {
      s1 += r / sd;
      s2 += (r / sd) * (r / sd);
    }
    std::vector<double> loo(n);
    const auto nm1 = static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
      const double r = d.residual[i] / sd;
      const double a = s1 - r;
      loo[i] = (s2 - r * r - a * a / nm1) / (nm1 - 1.0);
    }
    v[7] = stats::variance(loo);
  }

  {
    // Orthonormal degree-1 and degree-2 polynomials in t.
    std::vector<double> u1(n);
    std::vector<double> u2(n);
    const double tc = static_cast<double>(n - 1) / 2.0;
    for (std::size_t i = 0; i < n; ++i) u1[i] = static_cast<double>(i) - tc;
    double norm1 = 0.0;
    for (double a : u1) norm1 += a * a;
    norm1 = std::sqrt(norm1);
    for (double& a : u1) a /= norm1;
    for (std::size_t i = 0; i < n; ++i) u2[i] = (static_cast<double>(i) - tc) * (static_cast<double>(i) - tc);
    const double m_u2 = stats::mean(u2);
    double proj = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      u2[i] -= m_u2;
      proj += u2[i] * u1[i];
    }
    double norm2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      u2[i] -= proj * u1[i];
      norm2 += u2[i] * u2[i];
    }
    norm2 = std::sqrt(norm2);
    for (double& a : u2) a /= norm2;
    double lin = 0.0;
    double cur = 0.0;
    if (sd > 0.0)
      for (std::size_t i = 0; i < n; ++i) {
        lin += u1[i] * d.trend[i] / sd;
        cur += u2[i] * d.trend[i] / sd;
      }
    v[8] = lin;
    v[9] = cur;
  }

  v[10] = stats::acf(x, 1);
  double sumsq = 0.0;
  for (std::size_t k = 1; k <= 10; ++k) sumsq += stats::acf(x, k) * stats::acf(x, k);
  v[11] = sumsq;
  const auto d1 = stats::diff(x);
  const auto d2 = stats::diff(d1);
  v[12] = stats::acf(d1, 1);
  v[13] = stats::acf(d2, 1);
  double pac = 0.0;
  for (double a : fd::pacf(x, 5)) pac += a * a;
  v[14] = pac;
  v[15] = period >= 1 ? stats::acf(x, static_cast<std::size_t>(period)) : 0.0;
  v[16] = fd::spectral_entropy(x);
  v[17] = fd::hurst_exponent(x);
  const auto [stab, lump] = fd::tiled_stability_lumpiness(scaled, 10);
  v[18] = stab;
  v[19] = lump;
  v[20] = fd::flat_spots(x);

  const double med = stats::median(x);
  double crossings = 0.0;
  for (std::size_t i = 1; i < n; ++i)
    if ((x[i - 1] <= med) != (x[i] <= med)) crossings += 1.0;
  v[21] = crossings;
  v[22] = stats::stddev(d1);

  if (sd > 0.0) {
    double cum = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    for (double a : x) {
      cum += a - m;
      lo = std::min(lo, cum);
      hi = std::max(hi, cum);
    }
    v[23] = (hi - lo) / (sd * static_cast<double>(n));
  }

  for (double& a : v)
    if (!std::isfinite(a)) a = 0.0;
  return f;
}

inline FeatureVector extract(const TimeSeries& series, std::optional<int> period = std::nullopt) {
  return extract(series.values(), resolve_period(series, period));
}

}  // namespace tsad
