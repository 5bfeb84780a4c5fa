#pragma once

// Greedy matcher against the Kuhn oracle over exhaustive small instances and
// random larger ones. Shared by the unit tests and the acceptance runner.

#include <chrono>
#include <cstddef>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "tsad/evaluation/evaluate.hpp"
#include "tsad/util/random.hpp"

namespace suite {

struct MatchingReport {
  std::size_t instances = 0;
  std::size_t mismatches = 0;
  double seconds = 0.0;
  std::string first_failure;
};

inline std::vector<std::vector<std::size_t>> subsets_up_to(std::size_t universe, std::size_t max_size) {
  std::vector<std::vector<std::size_t>> out{{}};
  for (std::size_t k = 0; k < out.size(); ++k) {
    const auto cur = out[k];
    if (cur.size() == max_size) continue;
    for (std::size_t v = cur.empty() ? 0 : cur.back() + 1; v <= universe; ++v) {
      auto next = cur;
      next.push_back(v);
      out.push_back(std::move(next));
    }
  }
  return out;
}

/// Pairs are within margin, used once each, and tp/fp/fn partition the inputs.
inline bool well_formed(const tsad::MatchResult& r, const std::vector<std::size_t>& truth,
                        const std::vector<std::size_t>& detected, std::size_t margin) {
  std::multiset<std::size_t> t(r.fn.begin(), r.fn.end());
  std::multiset<std::size_t> d(r.fp.begin(), r.fp.end());
  for (auto [a, b] : r.tp) {
    if ((a > b ? a - b : b - a) > margin) return false;
    t.insert(a);
    d.insert(b);
  }
  return t == std::multiset<std::size_t>(truth.begin(), truth.end()) &&
         d == std::multiset<std::size_t>(detected.begin(), detected.end());
}

inline void check_one(MatchingReport& rep, const std::vector<std::size_t>& g, const std::vector<std::size_t>& c,
                      std::size_t margin) {
  ++rep.instances;
  const auto r = tsad::match_sorted(g, c, margin);
  const bool ok = well_formed(r, g, c, margin) && r.tp.size() == oracle::max_matching(g, c, margin);
  if (ok) return;
  if (rep.mismatches++ == 0) {
    rep.first_failure = "margin " + std::to_string(margin) + " truth {";
    for (auto v : g) rep.first_failure += std::to_string(v) + " ";
    rep.first_failure += "} detected {";
    for (auto v : c) rep.first_failure += std::to_string(v) + " ";
    rep.first_failure += "}";
  }
}

inline MatchingReport run_matching_suite(std::uint64_t seed = 4) {
  const auto start = std::chrono::steady_clock::now();
  MatchingReport rep;
  const auto small = subsets_up_to(12, 5);
  for (const auto& g : small)
    for (const auto& c : small) check_one(rep, g, c, 2);
  const auto wide = subsets_up_to(30, 2);
  for (std::size_t m : {1u, 3u, 5u})
    for (const auto& g : wide)
      for (const auto& c : wide) check_one(rep, g, c, m);

  tsad::Rng rng(seed);
  std::uniform_int_distribution<std::size_t> size(0, 40);
  std::uniform_int_distribution<std::size_t> pos(0, 400);
  std::uniform_int_distribution<std::size_t> margin(1, 12);
  auto draw = [&] {
    std::set<std::size_t> s;
    const auto k = size(rng);
    while (s.size() < k) s.insert(pos(rng));
    return std::vector<std::size_t>(s.begin(), s.end());
  };
  for (int i = 0; i < 10000; ++i) {
    const auto g = draw();
    const auto c = draw();
    check_one(rep, g, c, margin(rng));
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace suite
