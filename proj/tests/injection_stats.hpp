#pragma once

// Goodness-of-fit numbers for the injection sampler, shared by the unit tests
// and the acceptance runner.

#include <cmath>
#include <cstddef>
#include <vector>

#include "oracles.hpp"
#include "tsad/simulator/injection.hpp"

namespace suite {

struct InjectionStats {
  std::size_t n = 0;
  double gap_ks = 0.0;
  double z_ks = 0.0;
  double critical = 0.0;  // 1% level
  double downward_fraction = 0.0;
};

inline InjectionStats injection_stats(std::uint64_t seed, std::size_t n = 10000) {
  tsad::InjectionConfig cfg;
  tsad::Rng rng(seed);
  // long enough that n locations come out with overwhelming probability
  const auto plan = tsad::plan_spikes(static_cast<std::size_t>(cfg.tau_dist * (n + 1000)), cfg, rng);
  InjectionStats s;
  s.n = std::min(n, plan.locations.size());
  std::vector<double> gaps(s.n);
  std::vector<double> z(s.n);
  double down = 0.0;
  for (std::size_t i = 0; i < s.n; ++i) {
    gaps[i] = static_cast<double>(plan.locations[i] - (i ? plan.locations[i - 1] : 0));
    z[i] = std::abs(plan.magnitudes[i]);
    down += plan.signs[i];
  }
  const double p = 1.0 / cfg.tau_dist;
  s.gap_ks = oracle::ks_distance(
      gaps, [&](double k) { return oracle::geometric_cdf(k, p); },
      [&](double k) { return oracle::geometric_cdf(k - 1, p); });
  auto folded = [&](double v) { return oracle::folded_normal_cdf(v, cfg.spike.mu, cfg.spike.sigma); };
  s.z_ks = oracle::ks_distance(z, folded, folded);
  s.critical = oracle::ks_critical(0.01, s.n);
  s.downward_fraction = down / static_cast<double>(s.n);
  return s;
}

}  // namespace suite
