// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "automl_fixtures.hpp"
#include "injection_stats.hpp"
#include "matching_suite.hpp"
#include "tsad/detectors/detect.hpp"
#include "tsad/evaluation/evaluate.hpp"
#include "tsad/pipeline/benchmark.hpp"
#include "tsad/util/log.hpp"
#include "tsad/util/parallel.hpp"

namespace fs = std::filesystem;
using namespace tsad;

namespace {

int failures = 0;

void report(int n, bool ok, const std::string& detail) {
  if (!ok) ++failures;
  std::cout << "criterion " << n << ": " << (ok ? "PASS" : "FAIL") << "  " << detail << std::endl;
}

std::string fixed(double v, int digits = 3) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

std::string sci(double v) {
  std::ostringstream s;
  s << std::scientific << std::setprecision(2) << v;
  return s.str();
}

bool close(double a, double b, double tol = 1e-12) { return std::abs(a - b) <= tol; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void benchmark_criteria(const fs::path& work, int jobs) {
  std::vector<BenchmarkReport> reps;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    BenchmarkConfig c;
    c.seed = seed;
    c.jobs = jobs;
    c.models_dir = work / ("models_seed" + std::to_string(seed));
    reps.push_back(run_benchmark(c));
    print_benchmark(std::cout, reps.back());
    std::cout << "seconds " << fixed(reps.back().seconds, 1) << "\n\n";
  }

  int within = 0;
  int above = 0;
  std::string d1;
  double t_total = 0.0;
  for (const auto& r : reps) {
    const double a = r.automl().f_optimized;
    const double b = r.best_default();
    within += a >= b - 0.02;
    above += a > b;
    d1 += "seed " + std::to_string(r.seed) + " " + fixed(a) + " vs " + fixed(b) + "; ";
    t_total += r.seconds;
  }
  report(1, within == 3 && above >= 2,
         "AutoML vs best default: " + d1 + "within 0.02 in " + std::to_string(within) + "/3, above in " +
             std::to_string(above) + "/3, " + fixed(t_total, 0) + " s on " + std::to_string(jobs) + " jobs");

  double gap = 0.0;
  for (const auto& r : reps) gap += (r.automl().f_optimized - r.automl().f_random) / 3.0;
  report(2, gap >= 0.05, "mean tuned minus random AutoML F " + fixed(gap) + " (need >= 0.05)");

  int good = 0;
  std::string d3;
  for (const auto& r : reps) {
    const auto sp = r.plurality(AnomalyKind::spike);
    const auto lv = r.plurality(AnomalyKind::level_shift);
    const auto tr = r.plurality(AnomalyKind::trend_shift);
    const bool ok = sp == DetectorId::outlier &&
                    (lv == DetectorId::cusum || lv == DetectorId::bocpd || lv == DetectorId::statsig) &&
                    (tr == DetectorId::mkdetector || tr == DetectorId::trendsegmenter);
    good += ok;
    d3 += "seed " + std::to_string(r.seed) + " spike " + std::string(to_string(sp)) + ", level " +
          std::string(to_string(lv)) + ", trend " + std::string(to_string(tr)) + (ok ? " ok; " : " no; ");
  }
  report(3, good >= 2, d3 + std::to_string(good) + "/3 seeds match (need 2)");
}

void matching_criterion() {
  const auto rep = suite::run_matching_suite();
  report(4, rep.mismatches == 0 && rep.seconds < 60.0,
         std::to_string(rep.instances) + " instances, " + std::to_string(rep.mismatches) + " mismatches, " +
             fixed(rep.seconds, 1) + " s" + (rep.first_failure.empty() ? "" : ", first: " + rep.first_failure));
}

void exactness_criterion() {
  int bad = 0;
  const auto a = cusum_recursion(std::vector<double>{1, 1, 1}, 0.5);
  bad += !(close(a[0], 0.5) && close(a[1], 1.0) && close(a[2], 1.5));
  const auto b = cusum_recursion(std::vector<double>{-2, 1}, 0.5);
  bad += !(close(b[0], 0.0) && close(b[1], 0.5));
  bad += rolling_mann_kendall_s(std::vector<double>{1, 2, 3, 4}, 4)[3] != 6;
  bad += rolling_mann_kendall_s(std::vector<double>{4, 3, 2, 1}, 4)[3] != -6;
  bad += !close(f_beta(0.5, 0.5), 0.5);
  bad += !close(f_beta(2.0 / 3.0, 1.0), 0.8);
  bad += f_beta(0.0, 0.0) != 0.0;
  bad += !close(f_beta(0.5, 1.0, 2.0), 2.5 / 3.0);
  const auto e = evaluate(std::vector<std::size_t>{0, 100}, std::vector<std::size_t>{0, 97, 99}, {5, 1.0});
  bad += !(close(e.precision, 2.0 / 3.0) && close(e.recall, 1.0) && close(e.f_score, 0.8));
  report(5, bad == 0, std::to_string(bad) + " of 9 hand examples off by more than 1e-12");
}

void bocpd_criterion() {
  Rng rng(6);
  std::normal_distribution<double> z(0.0, 1.0);
  double worst_row = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> v(80);
    for (double& x : v) x = 3 * z(rng) + (rep % 5);
    const auto r = run_bocpd(TimeSeries::from_values(v), {}, true);
    for (const auto& row : r.posterior.rows)
      worst_row = std::max(worst_row, std::abs(std::accumulate(row.begin(), row.end(), 0.0) - 1.0));
  }
  double worst_step = 0.0;
  for (double h : {0.001, 0.01, 0.2, 0.5}) {
    BocpdParams p;
    p.changepoint_prior = h;
    std::vector<double> v(30);
    for (double& x : v) x = z(rng);
    const auto r = run_bocpd(TimeSeries::from_values(v), p, true);
    const auto& row = r.posterior.rows.front();
    worst_step = std::max({worst_step, std::abs(row[0] - h), std::abs(row[1] - (1 - h))});
  }
  Rng jr(100);
  std::vector<double> v(200);
  for (std::size_t t = 0; t < 200; ++t) v[t] = z(jr) + (t >= 100 ? 10.0 : 0.0);
  const auto s = bocpd_scores(TimeSeries::from_values(v), {});
  const long arg = static_cast<long>(std::max_element(s.begin(), s.end()) - s.begin());
  report(6, worst_row < 1e-9 && worst_step < 1e-9 && std::abs(arg - 100) <= 5,
         "row-sum error " + sci(worst_row) + ", one-step error " + sci(worst_step) +
             ", jump peak at " + std::to_string(arg));
}

void injection_criterion() {
  const auto st = suite::injection_stats(2024);
  const bool ok = st.n == 10000 && st.gap_ks < st.critical && st.z_ks < st.critical &&
                  std::abs(st.downward_fraction - 0.9) <= 0.03;
  report(7, ok,
         "n " + std::to_string(st.n) + ", gap KS " + fixed(st.gap_ks, 4) + ", |z| KS " + fixed(st.z_ks, 4) +
             " (1% critical " + fixed(st.critical, 4) + "), downward share " + fixed(st.downward_fraction, 4));
}

void tuner_criterion() {
  const double g = std::max(suite::tuner_gradient_error(3), suite::tuner_gradient_error(17));
  const double c = suite::constant_fit_error();
  report(8, g < 1e-4 && c < 0.01,
         "max gradient relative error " + sci(g) + ", constant-target error " + fixed(100 * c, 4) + "%");
}

void persistence_criterion(const fs::path& work) {
  const auto dir = work / "bundle_roundtrip";
  const auto bad = suite::bundle_roundtrip_mismatches(dir);

  std::vector<double> v(1000);
  Rng rng(9);
  std::normal_distribution<double> z(0.0, 1.0);
  for (std::size_t t = 0; t < v.size(); ++t) v[t] = std::sin(double(t) / 3.0) + z(rng) + (t >= 600 ? 4.0 : 0.0);
  const auto series = TimeSeries::from_values(v);
  double worst = 0.0;
  std::string slowest;
  const auto bundle = load_models(dir);
  for (DetectorId id : kAllDetectors) {
    const auto t0 = std::chrono::steady_clock::now();
    (void)detect(series, DetectorSpec{default_params(id)}, 5);
    const double s = seconds_since(t0);
    if (s > worst) {
      worst = s;
      slowest = std::string(to_string(id));
    }
  }
  const auto t0 = std::chrono::steady_clock::now();
  (void)detect(series, recommend(series, bundle), 5);
  const double rec = seconds_since(t0);
  report(9, bad == 0 && worst < 2.0 && rec < 2.0,
         std::to_string(bad) + "/100 predictions changed after reload; slowest detect " + fixed(worst, 3) + " s (" +
             slowest + "), recommend+detect " + fixed(rec, 3) + " s");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::string workdir = (fs::temp_directory_path() / "tsad_acceptance").string();
  int jobs = default_jobs();
  bool skip_benchmark = false;
  app.add_option("--workdir", workdir, "scratch directory");
  app.add_option("--jobs", jobs, "worker threads");
  app.add_flag("--skip-benchmark", skip_benchmark, "skip criteria 1-3");
  CLI11_PARSE(app, argc, argv);

  const fs::path work(workdir);
  fs::create_directories(work);
  log::quiet() = true;
  try {
    if (!skip_benchmark) benchmark_criteria(work, jobs);
    matching_criterion();
    exactness_criterion();
    bocpd_criterion();
    injection_criterion();
    tuner_criterion();
    persistence_criterion(work);
  } catch (const std::exception& e) {
    std::cout << "acceptance aborted: " << e.what() << std::endl;
    return 2;
  }
  std::cout << (failures == 0 ? "all criteria PASS" : "FAIL count " + std::to_string(failures)) << std::endl;
  return failures == 0 ? 0 : 1;
}
