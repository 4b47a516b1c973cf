#include "errscope/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "errscope/hash.hpp"
#include "errscope/random.hpp"

namespace errscope {

namespace {

constexpr double kMinGain = 1e-12;

struct PendingNode {
  int index;
  std::vector<std::size_t> rows;  // distinct rows present in the bootstrap
};

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& matrix, std::span<const std::uint8_t> errors, int max_depth,
              Rng& rng)
      : matrix_(matrix),
        errors_(errors),
        max_depth_(max_depth),
        rng_(rng),
        features_per_split_(static_cast<std::size_t>(
            std::ceil(std::sqrt(static_cast<double>(matrix.cols()))))),
        weight_(matrix.rows(), 0.0),
        present_(matrix.cols(), 0.0),
        present_errors_(matrix.cols(), 0.0) {}

  DecisionTree build() {
    const std::size_t n = matrix_.rows();
    for (std::size_t i = 0; i < n; ++i) weight_[uniform_index(rng_, n)] += 1.0;
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < n; ++r) {
      if (weight_[r] > 0.0) rows.push_back(r);
    }

    DecisionTree tree;
    tree.nodes.push_back(make_node(rows, 0));
    root_samples_ = tree.nodes[0].samples;

    std::vector<PendingNode> stack;
    stack.push_back({0, std::move(rows)});
    while (!stack.empty()) {
      auto pending = std::move(stack.back());
      stack.pop_back();
      split(tree, pending, stack);
    }
    return tree;
  }

 private:
  TreeNode make_node(const std::vector<std::size_t>& rows, int depth) const {
    TreeNode node;
    node.depth = depth;
    for (auto r : rows) {
      node.samples += weight_[r];
      node.errors += weight_[r] * errors_[r];
    }
    return node;
  }

  void split(DecisionTree& tree, PendingNode& pending, std::vector<PendingNode>& stack) {
    const TreeNode parent = tree.nodes[static_cast<std::size_t>(pending.index)];
    const double parent_gini = gini_impurity(parent.samples, parent.errors);
    if (parent.depth >= max_depth_ || parent_gini <= 0.0 || parent.samples < 2.0) return;

    std::vector<int> touched;
    for (auto r : pending.rows) {
      const double w = weight_[r];
      for (int f : matrix_.row(r)) {
        const auto fi = static_cast<std::size_t>(f);
        if (present_[fi] == 0.0) touched.push_back(f);
        present_[fi] += w;
        present_errors_[fi] += w * errors_[r];
      }
    }
    std::vector<int> varying;
    for (int f : touched) {
      if (present_[static_cast<std::size_t>(f)] < parent.samples) varying.push_back(f);
    }
    std::sort(varying.begin(), varying.end());

    // Uniform subset of the non-constant features via partial Fisher-Yates.
    const std::size_t k = std::min(features_per_split_, varying.size());
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + uniform_index(rng_, varying.size() - i);
      std::swap(varying[i], varying[j]);
    }
    std::sort(varying.begin(), varying.begin() + static_cast<std::ptrdiff_t>(k));

    int best_feature = -1;
    double best_gain = kMinGain;
    for (std::size_t i = 0; i < k; ++i) {
      const auto fi = static_cast<std::size_t>(varying[i]);
      const double np = present_[fi], ep = present_errors_[fi];
      const double na = parent.samples - np, ea = parent.errors - ep;
      const double gain = parent.samples * parent_gini - np * gini_impurity(np, ep) -
                          na * gini_impurity(na, ea);
      if (gain > best_gain) {
        best_gain = gain;
        best_feature = varying[i];
      }
    }
    for (int f : touched) {
      present_[static_cast<std::size_t>(f)] = 0.0;
      present_errors_[static_cast<std::size_t>(f)] = 0.0;
    }
    if (best_feature < 0) return;

    std::vector<std::size_t> with, without;
    for (auto r : pending.rows) {
      (matrix_.cell(r, best_feature) ? with : without).push_back(r);
    }
    TreeNode absent = make_node(without, parent.depth + 1);
    TreeNode present = make_node(with, parent.depth + 1);

    auto& node = tree.nodes[static_cast<std::size_t>(pending.index)];
    node.feature = best_feature;
    node.impurity_decrease =
        (parent.samples * parent_gini - absent.samples * gini_impurity(absent.samples, absent.errors) -
         present.samples * gini_impurity(present.samples, present.errors)) /
        root_samples_;
    node.absent = static_cast<int>(tree.nodes.size());
    node.present = node.absent + 1;
    const int absent_index = node.absent;
    tree.nodes.push_back(absent);
    tree.nodes.push_back(present);
    stack.push_back({absent_index + 1, std::move(with)});
    stack.push_back({absent_index, std::move(without)});
  }

  const FeatureMatrix& matrix_;
  std::span<const std::uint8_t> errors_;
  int max_depth_;
  Rng& rng_;
  std::size_t features_per_split_;
  double root_samples_ = 1.0;
  std::vector<double> weight_;
  std::vector<double> present_;
  std::vector<double> present_errors_;
};

}  // namespace

double gini_impurity(double samples, double errors) {
  if (samples <= 0.0) return 0.0;
  const double p = errors / samples;
  return 2.0 * p * (1.0 - p);
}

std::vector<double> Forest::feature_importances() const {
  std::vector<double> importances(n_features_, 0.0);
  if (trees_.empty()) return importances;
  for (const auto& tree : trees_) {
    for (const auto& node : tree.nodes) {
      if (!node.is_leaf()) importances[static_cast<std::size_t>(node.feature)] += node.impurity_decrease;
    }
  }
  for (auto& v : importances) v /= static_cast<double>(trees_.size());
  return importances;
}

Forest train_filter_forest(const FeatureMatrix& matrix, std::span<const std::uint8_t> errors,
                           const ForestOptions& options) {
  if (matrix.rows() != errors.size()) {
    throw std::invalid_argument("feature matrix rows do not match the error vector");
  }
  if (options.max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
  const auto n_errors = std::accumulate(errors.begin(), errors.end(), std::size_t{0});
  if (n_errors == 0 || n_errors == errors.size() || matrix.cols() == 0) {
    return Forest(matrix.cols(), {});
  }

  std::vector<DecisionTree> trees;
  trees.reserve(options.n_trees);
  for (std::size_t t = 0; t < options.n_trees; ++t) {
    Rng rng(mix_seed(options.seed, t));
    TreeBuilder builder(matrix, errors, options.max_depth, rng);
    trees.push_back(builder.build());
  }
  return Forest(matrix.cols(), std::move(trees));
}

std::vector<int> select_candidates(const Forest& forest, std::size_t cap) {
  const auto importances = forest.feature_importances();
  std::vector<int> ids;
  for (std::size_t f = 0; f < importances.size(); ++f) {
    if (importances[f] > 0.0) ids.push_back(static_cast<int>(f));
  }
  std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) {
    return importances[static_cast<std::size_t>(a)] > importances[static_cast<std::size_t>(b)];
  });
  if (ids.size() > cap) ids.resize(cap);
  return ids;
}

}  // namespace errscope
