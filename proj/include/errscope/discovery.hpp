#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "errscope/features.hpp"
#include "errscope/forest.hpp"
#include "errscope/ingest.hpp"
#include "errscope/rule.hpp"
#include "errscope/significance.hpp"

namespace errscope {

struct DiscoveryConfig {
  std::size_t max_conditions = 2;
  double min_support_fraction = 0.05;
  std::optional<double> min_error_rate;  // nullopt: the baseline error rate
  std::size_t n_trees = 100;
  int max_depth = 3;
  std::size_t candidate_cap = kDefaultCandidateCap;
  std::size_t bootstrap_resamples = kDefaultBootstrapResamples;
  double alpha = kDefaultAlpha;
  std::uint64_t rng_seed = 0;
  bool use_forest_filter = true;
  // Drops conjunctions that do not strictly beat every sub-rule's error rate.
  bool prune_redundant = true;

  // Throws std::invalid_argument when a field is out of range.
  void validate() const;
  SignificanceOptions significance() const { return {bootstrap_resamples, alpha, rng_seed}; }
  ForestOptions forest() const { return {n_trees, max_depth, rng_seed}; }
};

struct RuleSet {
  std::vector<Rule> rules;  // error rate descending, then support descending
  double baseline_error_rate = 0.0;
  double min_error_rate = 0.0;  // threshold actually applied
  std::size_t n_test = 0;
  std::size_t candidate_count = 0;  // token features that reached enumeration
};

// Evaluates every 1-condition rule over candidates and high-level buckets and
// their 2- (and, when configured, 3-) way conjunctions; keeps rules meeting the
// support and error-rate thresholds, then attaches p-values and intervals.
std::vector<Rule> enumerate_and_evaluate(std::span<const int> candidates,
                                         const std::vector<HighLevelFeature>& high_level,
                                         const Vocabulary& vocab, const FeatureMatrix& matrix,
                                         std::span<const std::uint8_t> errors,
                                         const DiscoveryConfig& config);

// Forest filter, candidate selection, enumeration and significance in one
// deterministic run.
RuleSet discover(const DatasetStore& store, const Vocabulary& vocab, const FeatureMatrix& matrix,
                 const std::vector<HighLevelFeature>& high_level, const DiscoveryConfig& config);

// Error rate descending, support descending, conditions ascending.
void sort_rules(std::vector<Rule>& rules);

}  // namespace errscope
