#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "tsad/core/error.hpp"
#include "tsad/detectors/registry.hpp"
#include "tsad/util/random.hpp"

namespace tsad {

struct TunerParams {
  int hidden = 32;
  int epochs = 2000;
  double learning_rate = 0.01;
  double l2 = 1e-2;
  double row_margin = 0.15;  ///< training rows: detector F within this of the row's best; < 0 uses all F > 0
  std::uint64_t seed = 0;
};

/// Numeric heads regress on a unit-interval encoding of the registry range.
/// Ranges with a positive lower bound are encoded on a log scale: thresholds,
/// multipliers and window lengths act multiplicatively, so averaging their
/// logs keeps products such as iqr_mult * threshold consistent.
inline bool log_encoded(const ParamSpec& s) {
  return s.kind == ParamKind::log_real || (s.kind != ParamKind::boolean && s.lo > 0.0);
}

inline double encode_param(const ParamSpec& s, double v) {
  if (!(s.hi > s.lo)) return 0.0;
  if (log_encoded(s)) return (std::log(v) - std::log(s.lo)) / (std::log(s.hi) - std::log(s.lo));
  return (v - s.lo) / (s.hi - s.lo);
}

inline double decode_param(const ParamSpec& s, double u) {
  if (log_encoded(s)) return s.clamp(std::exp(std::log(s.lo) + u * (std::log(s.hi) - std::log(s.lo))));
  return s.clamp(s.lo + u * (s.hi - s.lo));
}

/// Shared tanh layer feeding one output head per hyperparameter: a scalar
/// regression head for numeric parameters, a softmax head for booleans.
class TunerModel {
 public:
  TunerModel() = default;

  TunerModel(DetectorId detector, std::size_t n_inputs, const TunerParams& params)
      : detector_(detector), n_inputs_(n_inputs), hidden_(params.hidden), params_(params) {
    feature_mean_.assign(n_inputs, 0.0);
    feature_sd_.assign(n_inputs, 1.0);
    layout();
    Rng rng(params.seed);
    theta_.setZero(size_);
    const double s1 = std::sqrt(1.0 / static_cast<double>(std::max<std::size_t>(n_inputs, 1)));
    const double s2 = std::sqrt(1.0 / static_cast<double>(hidden_));
    std::normal_distribution<double> n(0.0, 1.0);
    for (Eigen::Index i = 0; i < hidden_ * static_cast<Eigen::Index>(n_inputs_); ++i) theta_(i) = s1 * n(rng);
    for (const auto& h : heads_)
      for (Eigen::Index i = 0; i < h.width * hidden_; ++i) theta_(h.offset + i) = s2 * n(rng);
  }

  [[nodiscard]] DetectorId detector() const noexcept { return detector_; }
  [[nodiscard]] const std::vector<ParamSpec>& space() const { return search_space(detector_); }
  [[nodiscard]] std::size_t n_heads() const noexcept { return heads_.size(); }
  [[nodiscard]] std::size_t n_inputs() const noexcept { return n_inputs_; }
  [[nodiscard]] const Eigen::VectorXd& theta() const noexcept { return theta_; }
  void set_theta(const Eigen::VectorXd& t) { theta_ = t; }

  void set_standardization(std::vector<double> mean, std::vector<double> sd) {
    feature_mean_ = std::move(mean);
    feature_sd_ = std::move(sd);
  }

  /// Targets hold per row and head either the encoded unit value (numeric)
  /// or the class index (categorical). Inputs are already standardized.
  /// Per-head losses are row-weighted means (weights sum to 1; empty means
  /// uniform). Returns their average + l2/2 * ||weights||^2; fills `grad` if given.
  double loss_and_gradient(const Eigen::MatrixXd& x, const Eigen::MatrixXd& targets, const Eigen::VectorXd& theta,
                           Eigen::VectorXd* grad, const Eigen::VectorXd& row_weights = {}) const {
    const Eigen::Index n = x.rows();
    const Eigen::VectorXd rw =
        row_weights.size() == n ? Eigen::VectorXd(row_weights) : Eigen::VectorXd::Constant(n, 1.0 / double(n));
    const Eigen::Index d = static_cast<Eigen::Index>(n_inputs_);
    const Eigen::Index H = hidden_;
    Eigen::Map<const Eigen::MatrixXd> w1(theta.data(), H, d);
    Eigen::Map<const Eigen::VectorXd> b1(theta.data() + H * d, H);
    const Eigen::MatrixXd a = ((x * w1.transpose()).rowwise() + b1.transpose()).array().tanh().matrix();

    const double nh = static_cast<double>(heads_.size());
    double loss = 0.0;
    Eigen::MatrixXd da = Eigen::MatrixXd::Zero(n, H);
    if (grad) grad->setZero(theta.size());

    for (std::size_t k = 0; k < heads_.size(); ++k) {
      const auto& h = heads_[k];
      Eigen::Map<const Eigen::MatrixXd> w(theta.data() + h.offset, h.width, H);
      Eigen::Map<const Eigen::VectorXd> b(theta.data() + h.offset + h.width * H, h.width);
      const Eigen::MatrixXd out = (a * w.transpose()).rowwise() + b.transpose();
      Eigen::MatrixXd dout(n, h.width);
      if (!h.categorical) {
        const Eigen::VectorXd r = out.col(0) - targets.col(static_cast<Eigen::Index>(k));
        loss += rw.dot(r.cwiseProduct(r)) / nh;
        dout.col(0) = 2.0 * rw.cwiseProduct(r) / nh;
      } else {
        for (Eigen::Index i = 0; i < n; ++i) {
          const double m = out.row(i).maxCoeff();
          Eigen::RowVectorXd e = (out.row(i).array() - m).exp().matrix();
          const double z = e.sum();
          const auto cls = static_cast<Eigen::Index>(targets(i, static_cast<Eigen::Index>(k)));
          loss += -rw(i) * (out(i, cls) - m - std::log(z)) / nh;
          e /= z;
          e(cls) -= 1.0;
          dout.row(i) = rw(i) * e / nh;
        }
      }
      if (grad) {
        Eigen::Map<Eigen::MatrixXd> gw(grad->data() + h.offset, h.width, H);
        Eigen::Map<Eigen::VectorXd> gb(grad->data() + h.offset + h.width * H, h.width);
        gw = dout.transpose() * a + params_.l2 * w;
        gb = dout.colwise().sum().transpose();
        da += dout * w;
      }
      loss += 0.5 * params_.l2 * w.squaredNorm();
    }
    loss += 0.5 * params_.l2 * w1.squaredNorm();
    if (grad) {
      const Eigen::MatrixXd dz = (da.array() * (1.0 - a.array().square())).matrix();
      Eigen::Map<Eigen::MatrixXd> gw1(grad->data(), H, d);
      Eigen::Map<Eigen::VectorXd> gb1(grad->data() + H * d, H);
      gw1 = dz.transpose() * x + params_.l2 * w1;
      gb1 = dz.colwise().sum().transpose();
    }
    return loss;
  }

  /// Full-batch Adam on raw feature rows and registry-unit targets. Optional
  /// per-row weights are normalized to sum to 1.
  void fit(const std::vector<std::vector<double>>& features, const std::vector<std::vector<double>>& values,
           const std::vector<double>& weights = {}) {
    const std::size_t n = features.size();
    if (n == 0 || values.size() != n) fail(Errc::invalid_argument, "tuner needs matching non-empty rows");
    if (!weights.empty() && weights.size() != n) fail(Errc::invalid_argument, "tuner weights must match rows");
    Eigen::VectorXd rw = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), 1.0);
    for (std::size_t i = 0; i < weights.size(); ++i) rw(static_cast<Eigen::Index>(i)) = weights[i];
    rw /= rw.sum();
    feature_mean_.assign(n_inputs_, 0.0);
    feature_sd_.assign(n_inputs_, 0.0);
    for (const auto& row : features)
      for (std::size_t j = 0; j < n_inputs_; ++j) feature_mean_[j] += row[j] / static_cast<double>(n);
    for (const auto& row : features)
      for (std::size_t j = 0; j < n_inputs_; ++j)
        feature_sd_[j] += (row[j] - feature_mean_[j]) * (row[j] - feature_mean_[j]) / static_cast<double>(n);
    for (double& s : feature_sd_) s = s > 1e-24 ? std::sqrt(s) : 1.0;

    Eigen::MatrixXd x(n, n_inputs_);
    Eigen::MatrixXd t(n, heads_.size());
    for (std::size_t i = 0; i < n; ++i) {
      const auto z = standardize(features[i]);
      for (std::size_t j = 0; j < n_inputs_; ++j) x(i, j) = z[j];
      for (std::size_t k = 0; k < heads_.size(); ++k) {
        const auto& spec = space()[k];
        const double v = spec.clamp(values[i][k]);
        t(i, k) = heads_[k].categorical ? v : encode_param(spec, v);
      }
    }
    train(x, t, rw);
  }

  void train(const Eigen::MatrixXd& x, const Eigen::MatrixXd& targets, const Eigen::VectorXd& row_weights = {}) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(size_);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(size_);
    Eigen::VectorXd g(size_);
    const double b1 = 0.9;
    const double b2 = 0.999;
    for (int step = 1; step <= params_.epochs; ++step) {
      loss_and_gradient(x, targets, theta_, &g, row_weights);
      m = b1 * m + (1 - b1) * g;
      v = b2 * v + (1 - b2) * g.cwiseProduct(g);
      const double c1 = 1 - std::pow(b1, step);
      const double c2 = 1 - std::pow(b2, step);
      theta_.array() -= params_.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + 1e-8);
    }
  }

  [[nodiscard]] std::vector<double> standardize(std::span<const double> f) const {
    if (f.size() != n_inputs_)
      fail(Errc::schema_mismatch, "tuner expects " + std::to_string(n_inputs_) + " features, got " +
                                      std::to_string(f.size()));
    std::vector<double> z(f.size());
    for (std::size_t j = 0; j < f.size(); ++j) z[j] = (f[j] - feature_mean_[j]) / feature_sd_[j];
    return z;
  }

  /// Registry-ordered hyperparameter values, clamped to the space.
  [[nodiscard]] std::vector<double> predict_values(std::span<const double> features) const {
    const auto z = standardize(features);
    const Eigen::Index H = hidden_;
    const Eigen::Index d = static_cast<Eigen::Index>(n_inputs_);
    Eigen::Map<const Eigen::MatrixXd> w1(theta_.data(), H, d);
    Eigen::Map<const Eigen::VectorXd> b1(theta_.data() + H * d, H);
    Eigen::Map<const Eigen::VectorXd> zx(z.data(), d);
    const Eigen::VectorXd a = (w1 * zx + b1).array().tanh().matrix();
    std::vector<double> out;
    for (std::size_t k = 0; k < heads_.size(); ++k) {
      const auto& h = heads_[k];
      Eigen::Map<const Eigen::MatrixXd> w(theta_.data() + h.offset, h.width, H);
      Eigen::Map<const Eigen::VectorXd> b(theta_.data() + h.offset + h.width * H, h.width);
      const Eigen::VectorXd o = w * a + b;
      if (h.categorical) {
        Eigen::Index best = 0;
        o.maxCoeff(&best);
        out.push_back(space()[k].clamp(static_cast<double>(best)));
      } else {
        out.push_back(decode_param(space()[k], o(0)));
      }
    }
    return out;
  }

  [[nodiscard]] DetectorParams predict(std::span<const double> features) const {
    return params_from_values(detector_, predict_values(features));
  }

  [[nodiscard]] nlohmann::json to_json() const {
    return {{"detector", std::string(to_string(detector_))},
            {"n_inputs", n_inputs_},
            {"hidden", hidden_},
            {"epochs", params_.epochs},
            {"learning_rate", params_.learning_rate},
            {"l2", params_.l2},
            {"seed", params_.seed},
            {"feature_mean", feature_mean_},
            {"feature_sd", feature_sd_},
            {"theta", std::vector<double>(theta_.data(), theta_.data() + theta_.size())}};
  }

  static TunerModel from_json(const nlohmann::json& j) {
    TunerModel m;
    try {
      m.detector_ = detector_from_string(j.at("detector").get<std::string>());
      m.n_inputs_ = j.at("n_inputs").get<std::size_t>();
      m.hidden_ = j.at("hidden").get<int>();
      m.params_.hidden = m.hidden_;
      m.params_.epochs = j.at("epochs").get<int>();
      m.params_.learning_rate = j.at("learning_rate").get<double>();
      m.params_.l2 = j.at("l2").get<double>();
      m.params_.seed = j.at("seed").get<std::uint64_t>();
      m.feature_mean_ = j.at("feature_mean").get<std::vector<double>>();
      m.feature_sd_ = j.at("feature_sd").get<std::vector<double>>();
      const auto theta = j.at("theta").get<std::vector<double>>();
      if (m.hidden_ < 1) fail(Errc::corrupt_file, "tuner hidden width must be positive");
      m.layout();
      if (static_cast<Eigen::Index>(theta.size()) != m.size_ || m.feature_mean_.size() != m.n_inputs_ ||
          m.feature_sd_.size() != m.n_inputs_)
        fail(Errc::corrupt_file, "tuner weight sizes do not match its architecture");
      m.theta_ = Eigen::Map<const Eigen::VectorXd>(theta.data(), static_cast<Eigen::Index>(theta.size()));
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::corrupt_file, std::string("tuner: ") + e.what());
    }
    return m;
  }

 private:
  struct Head {
    bool categorical = false;
    Eigen::Index width = 1;
    Eigen::Index offset = 0;
  };

  void layout() {
    heads_.clear();
    Eigen::Index off = static_cast<Eigen::Index>(hidden_) * static_cast<Eigen::Index>(n_inputs_) + hidden_;
    for (const auto& s : space()) {
      Head h;
      h.categorical = s.categorical();
      h.width = h.categorical ? 2 : 1;
      h.offset = off;
      off += h.width * hidden_ + h.width;
      heads_.push_back(h);
    }
    size_ = off;
  }

  DetectorId detector_ = DetectorId::outlier;
  std::size_t n_inputs_ = 0;
  int hidden_ = 32;
  TunerParams params_;
  std::vector<double> feature_mean_;
  std::vector<double> feature_sd_;
  std::vector<Head> heads_;
  Eigen::Index size_ = 0;
  Eigen::VectorXd theta_;
};

}  // namespace tsad
