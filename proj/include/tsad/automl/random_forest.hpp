#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsad/core/error.hpp"
#include "tsad/util/random.hpp"

namespace tsad {

struct ForestParams {
  int n_trees = 200;
  int max_depth = 12;
  int min_leaf = 1;
  int max_features = 0;  ///< features tried per split; 0 means round(sqrt(d))
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

/// Axis-aligned binary tree; a node is a leaf when feature < 0.
struct DecisionTree {
  struct Node {
    int feature = -1;
    double threshold = 0.0;  ///< go left when x[feature] <= threshold
    int left = -1;
    int right = -1;
    std::vector<double> proba;
  };
  std::vector<Node> nodes;

  [[nodiscard]] const std::vector<double>& leaf(std::span<const double> x) const {
    int i = 0;
    while (nodes[i].feature >= 0) i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
    return nodes[i].proba;
  }
};

namespace forest_detail {

inline double gini(const std::vector<double>& counts, double total) {
  if (total <= 0.0) return 0.0;
  double s = 1.0;
  for (double c : counts) s -= (c / total) * (c / total);
  return s;
}

struct Builder {
  const std::vector<std::vector<double>>& x;
  const std::vector<int>& y;
  int n_classes;
  const ForestParams& params;
  int max_features;
  Rng& rng;
  DecisionTree tree;

  std::vector<double> counts(std::span<const std::size_t> rows) const {
    std::vector<double> c(n_classes, 0.0);
    for (auto r : rows) c[y[r]] += 1.0;
    return c;
  }

  int grow(std::vector<std::size_t>& rows, int depth) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    const auto c = counts(rows);
    const double total = static_cast<double>(rows.size());
    auto make_leaf = [&] {
      auto& node = tree.nodes[id];
      node.proba.resize(n_classes);
      for (int k = 0; k < n_classes; ++k) node.proba[k] = c[k] / total;
      return id;
    };
    const double parent = gini(c, total);
    if (depth >= params.max_depth || rows.size() < 2 * static_cast<std::size_t>(params.min_leaf) || parent <= 0.0)
      return make_leaf();

    const int d = static_cast<int>(x.front().size());
    std::vector<int> feats(d);
    std::iota(feats.begin(), feats.end(), 0);
    std::shuffle(feats.begin(), feats.end(), rng);
    feats.resize(std::min(max_features, d));

    int best_f = -1;
    double best_thr = 0.0;
    double best_imp = parent - 1e-12;
    std::vector<std::size_t> order(rows);
    for (int f : feats) {
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return x[a][f] < x[b][f] || (x[a][f] == x[b][f] && a < b);
      });
      std::vector<double> lc(n_classes, 0.0);
      std::vector<double> rc = c;
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        lc[y[order[i]]] += 1.0;
        rc[y[order[i]]] -= 1.0;
        const double lo = x[order[i]][f];
        const double hi = x[order[i + 1]][f];
        if (!(lo < hi)) continue;
        const double nl = static_cast<double>(i + 1);
        const double nr = total - nl;
        if (nl < params.min_leaf || nr < params.min_leaf) continue;
        const double imp = (nl * gini(lc, nl) + nr * gini(rc, nr)) / total;
        if (imp < best_imp) {
          best_imp = imp;
          best_f = f;
          best_thr = 0.5 * (lo + hi);
          if (!(best_thr > lo && best_thr < hi)) best_thr = lo;
        }
      }
    }
    if (best_f < 0) return make_leaf();

    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (auto r : rows) (x[r][best_f] <= best_thr ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    tree.nodes[id].feature = best_f;
    tree.nodes[id].threshold = best_thr;
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    tree.nodes[id].left = l;
    tree.nodes[id].right = r;
    return id;
  }
};

}  // namespace forest_detail

/// Bagged Gini trees with a random feature subset at every split.
class RandomForest {
 public:
  RandomForest() = default;

  void fit(const std::vector<std::vector<double>>& x, const std::vector<int>& y, int n_classes,
           const ForestParams& params) {
    if (x.empty() || x.size() != y.size()) fail(Errc::invalid_argument, "forest needs matching non-empty X and y");
    if (params.n_trees < 1 || params.max_depth < 0 || params.min_leaf < 1)
      fail(Errc::invalid_config, "forest needs n_trees >= 1, max_depth >= 0, min_leaf >= 1");
    params_ = params;
    n_classes_ = n_classes;
    n_features_ = static_cast<int>(x.front().size());
    const int mf = params.max_features > 0
                       ? params.max_features
                       : std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(n_features_)))));
    trees_.clear();
    const std::size_t n = x.size();
    for (int b = 0; b < params.n_trees; ++b) {
      Rng rng(derive_seed(params.seed, {static_cast<std::uint64_t>(b)}));
      std::vector<std::size_t> rows(n);
      if (params.bootstrap) {
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        for (auto& r : rows) r = pick(rng);
        std::sort(rows.begin(), rows.end());
      } else {
        std::iota(rows.begin(), rows.end(), 0);
      }
      forest_detail::Builder builder{x, y, n_classes, params, mf, rng, {}};
      builder.grow(rows, 0);
      trees_.push_back(std::move(builder.tree));
    }
  }

  [[nodiscard]] std::vector<double> predict_proba(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != n_features_)
      fail(Errc::schema_mismatch, "forest expects " + std::to_string(n_features_) + " features, got " +
                                      std::to_string(x.size()));
    std::vector<double> p(n_classes_, 0.0);
    for (const auto& t : trees_) {
      const auto& leaf = t.leaf(x);
      for (int k = 0; k < n_classes_; ++k) p[k] += leaf[k];
    }
    const double s = std::accumulate(p.begin(), p.end(), 0.0);
    for (double& v : p) v /= s;
    return p;
  }

  [[nodiscard]] int predict(std::span<const double> x) const {
    const auto p = predict_proba(x);
    return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
  }

  [[nodiscard]] const ForestParams& params() const noexcept { return params_; }
  [[nodiscard]] int n_classes() const noexcept { return n_classes_; }
  [[nodiscard]] int n_features() const noexcept { return n_features_; }
  [[nodiscard]] const std::vector<DecisionTree>& trees() const noexcept { return trees_; }

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : trees_) {
      nlohmann::json nodes = nlohmann::json::array();
      for (const auto& n : t.nodes) {
        if (n.feature < 0) nodes.push_back({{"p", n.proba}});
        else nodes.push_back({{"f", n.feature}, {"t", n.threshold}, {"l", n.left}, {"r", n.right}});
      }
      trees.push_back(nodes);
    }
    return {{"n_trees", params_.n_trees}, {"max_depth", params_.max_depth},   {"min_leaf", params_.min_leaf},
            {"max_features", params_.max_features}, {"bootstrap", params_.bootstrap}, {"seed", params_.seed},
            {"n_classes", n_classes_}, {"n_features", n_features_},           {"trees", trees}};
  }

  static RandomForest from_json(const nlohmann::json& j) {
    RandomForest f;
    try {
      f.params_.n_trees = j.at("n_trees").get<int>();
      f.params_.max_depth = j.at("max_depth").get<int>();
      f.params_.min_leaf = j.at("min_leaf").get<int>();
      f.params_.max_features = j.at("max_features").get<int>();
      f.params_.bootstrap = j.at("bootstrap").get<bool>();
      f.params_.seed = j.at("seed").get<std::uint64_t>();
      f.n_classes_ = j.at("n_classes").get<int>();
      f.n_features_ = j.at("n_features").get<int>();
      for (const auto& tj : j.at("trees")) {
        DecisionTree t;
        for (const auto& nj : tj) {
          DecisionTree::Node n;
          if (nj.contains("p")) {
            n.proba = nj.at("p").get<std::vector<double>>();
            if (static_cast<int>(n.proba.size()) != f.n_classes_) fail(Errc::corrupt_file, "leaf size mismatch");
          } else {
            n.feature = nj.at("f").get<int>();
            n.threshold = nj.at("t").get<double>();
            n.left = nj.at("l").get<int>();
            n.right = nj.at("r").get<int>();
          }
          t.nodes.push_back(std::move(n));
        }
        const int sz = static_cast<int>(t.nodes.size());
        if (sz == 0) fail(Errc::corrupt_file, "empty tree");
        for (const auto& n : t.nodes)
          if (n.feature >= 0 && (n.feature >= f.n_features_ || n.left <= 0 || n.left >= sz || n.right <= 0 ||
                                 n.right >= sz))
            fail(Errc::corrupt_file, "tree node references out of range");
        f.trees_.push_back(std::move(t));
      }
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::corrupt_file, std::string("forest: ") + e.what());
    }
    if (f.trees_.empty()) fail(Errc::corrupt_file, "forest has no trees");
    return f;
  }

 private:
  ForestParams params_;
  int n_classes_ = 0;
  int n_features_ = 0;
  std::vector<DecisionTree> trees_;
};

}  // namespace tsad
