#pragma once

// Small synthetic fixtures for the selector, tuner and bundle, shared by the
// unit tests and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "tsad/automl/models.hpp"

namespace suite {

/// Rows with Gaussian features; the label is a function of the first two
/// features so the selector has something to learn.
inline std::vector<tsad::TrainingExample> synthetic_table(std::size_t n, std::uint64_t seed) {
  tsad::Rng rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<tsad::TrainingExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    tsad::TrainingExample ex;
    for (double& v : ex.features.values) v = z(rng);
    const int label = (ex.features.values[0] > 0 ? 1 : 0) + (ex.features.values[1] > 0 ? 2 : 0);
    ex.best_detector = tsad::kAllDetectors[static_cast<std::size_t>(label)];
    for (std::size_t d = 0; d < tsad::kNumDetectors; ++d) {
      ex.best_params[d] = tsad::sample_params(tsad::kAllDetectors[d], rng);
      ex.best_f[d] = d == static_cast<std::size_t>(label) ? 0.9 : 0.8;
    }
    ex.series_index = i;
    out.push_back(std::move(ex));
  }
  return out;
}

inline tsad::FeatureVector random_features(tsad::Rng& rng) {
  std::normal_distribution<double> z(0.0, 1.5);
  tsad::FeatureVector f;
  for (double& v : f.values) v = z(rng);
  return f;
}

/// Largest relative gap between the analytic tuner gradient and central finite
/// differences; components below 1e-6 in both are compared absolutely.
inline double tuner_gradient_error(std::uint64_t seed = 3) {
  tsad::TunerParams p;
  p.hidden = 6;
  p.seed = seed;
  const std::size_t d = 4;
  const tsad::TunerModel m(tsad::DetectorId::cusum, d, p);
  tsad::Rng rng(seed + 1);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto& space = m.space();
  Eigen::MatrixXd x(5, static_cast<Eigen::Index>(d));
  Eigen::MatrixXd t(5, static_cast<Eigen::Index>(space.size()));
  for (Eigen::Index i = 0; i < 5; ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = z(rng);
    for (std::size_t k = 0; k < space.size(); ++k)
      t(i, static_cast<Eigen::Index>(k)) = space[k].categorical() ? double(i % 2) : u(rng);
  }
  Eigen::VectorXd w(5);
  w << 0.1, 0.3, 0.2, 0.25, 0.15;
  Eigen::VectorXd theta = m.theta();
  for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) += 0.3 * z(rng);
  Eigen::VectorXd g(theta.size());
  m.loss_and_gradient(x, t, theta, &g, w);
  const double h = 1e-5;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    Eigen::VectorXd a = theta;
    Eigen::VectorXd b = theta;
    a(i) += h;
    b(i) -= h;
    const double fd = (m.loss_and_gradient(x, t, a, nullptr, w) - m.loss_and_gradient(x, t, b, nullptr, w)) / (2 * h);
    worst = std::max(worst, std::abs(fd - g(i)) / std::max({std::abs(fd), std::abs(g(i)), 1e-6}));
  }
  return worst;
}

/// Worst relative error of every numeric head when all training rows share
/// one target assignment.
inline double constant_fit_error(std::uint64_t seed = 5) {
  const auto target = tsad::params_to_values(tsad::CusumParams{});
  tsad::Rng rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<std::vector<double>> x;
  std::vector<std::vector<double>> v;
  for (int i = 0; i < 30; ++i) {
    std::vector<double> row(6);
    for (double& r : row) r = z(rng);
    x.push_back(row);
    v.push_back(target);
  }
  tsad::TunerParams p;
  p.seed = seed;
  tsad::TunerModel m(tsad::DetectorId::cusum, 6, p);
  m.fit(x, v);
  double worst = 0.0;
  const auto& space = m.space();
  for (int i = 0; i < 20; ++i) {
    std::vector<double> q(6);
    for (double& r : q) r = z(rng);
    const auto got = m.predict_values(q);
    for (std::size_t k = 0; k < space.size(); ++k) {
      if (space[k].categorical()) {
        worst = std::max(worst, got[k] == target[k] ? 0.0 : 1.0);
        continue;
      }
      const double scale = std::max(std::abs(target[k]), 1e-12);
      worst = std::max(worst, std::abs(got[k] - target[k]) / scale);
    }
  }
  return worst;
}

inline tsad::TrainConfig fast_train_config() {
  tsad::TrainConfig c;
  c.forest.n_trees = 30;
  c.tuner.epochs = 200;
  c.tuner.hidden = 8;
  return c;
}

/// Trains a small bundle, saves it, loads it back and counts the feature
/// vectors (of `n`) whose recommendation changed.
inline std::size_t bundle_roundtrip_mismatches(const std::filesystem::path& dir, std::size_t n = 100) {
  const auto table = synthetic_table(80, 11);
  const auto bundle = tsad::train_models(table, fast_train_config());
  std::filesystem::remove_all(dir);
  tsad::save_models(dir, bundle);
  const auto back = tsad::load_models(dir);
  tsad::Rng rng(12);
  std::size_t bad = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto f = random_features(rng);
    const bool same = tsad::recommend(f, bundle.selector, bundle.tuners) == tsad::recommend(f, back.selector, back.tuners) &&
                      bundle.selector.probabilities(f) == back.selector.probabilities(f);
    bad += same ? 0 : 1;
  }
  return bad;
}

}  // namespace suite
