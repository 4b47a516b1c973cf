#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "errscope/features.hpp"

namespace errscope {

struct ForestOptions {
  std::size_t n_trees = 100;
  int max_depth = 3;
  std::uint64_t seed = 0;
};

// Sample counts are bootstrap-weighted.
struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  int absent = -1;   // child for rows without the feature
  int present = -1;  // child for rows with the feature
  int depth = 0;
  double samples = 0.0;
  double errors = 0.0;
  // (samples * gini - sum over children of samples * gini) / root samples.
  double impurity_decrease = 0.0;

  bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
};

class Forest {
 public:
  Forest() = default;
  Forest(std::size_t n_features, std::vector<DecisionTree> trees)
      : n_features_(n_features), trees_(std::move(trees)) {}

  bool empty() const { return trees_.empty(); }
  std::size_t n_features() const { return n_features_; }
  const std::vector<DecisionTree>& trees() const { return trees_; }

  // Mean over trees of each feature's total impurity decrease.
  std::vector<double> feature_importances() const;

 private:
  std::size_t n_features_ = 0;
  std::vector<DecisionTree> trees_;
};

// 2 p (1 - p) for a node holding `errors` of `samples` (weighted).
double gini_impurity(double samples, double errors);

// CART trees over binary features with Gini splits, bootstrap rows and
// ceil(sqrt(F)) features drawn per split among those not constant in the node.
// Returns an empty forest when the error vector is all zeros or all ones.
Forest train_filter_forest(const FeatureMatrix& matrix, std::span<const std::uint8_t> errors,
                           const ForestOptions& options);

inline constexpr std::size_t kDefaultCandidateCap = 500;

// Features with positive importance, by importance descending (ties by id),
// truncated to `cap`.
std::vector<int> select_candidates(const Forest& forest, std::size_t cap = kDefaultCandidateCap);

}  // namespace errscope
