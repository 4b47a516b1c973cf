#include "errscope/discovery.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "errscope/doc_bitset.hpp"

namespace errscope {

namespace {

struct Item {
  Condition condition;
  DocBitset docs;
  std::size_t support = 0;
  std::size_t errors = 0;
  double error_rate = 0.0;
};

struct RuleLimits {
  double min_support_fraction;
  double min_error_rate;
  std::size_t n;

  bool supported(std::size_t count) const {
    return static_cast<double>(count) / static_cast<double>(n) >= min_support_fraction;
  }
};

double rate(std::size_t errors, std::size_t support) {
  return static_cast<double>(errors) / static_cast<double>(support);
}

// Two buckets of the same high-level feature never co-occur.
bool compatible(const Item& a, const Item& b) {
  return !(a.condition.kind == ConditionKind::kHighLevel &&
           b.condition.kind == ConditionKind::kHighLevel && a.condition.feature == b.condition.feature);
}

struct Kept {
  std::vector<Condition> conditions;
  DocBitset docs;
};

}  // namespace

void DiscoveryConfig::validate() const {
  if (max_conditions < 1 || max_conditions > kMaxConditionsLimit) {
    throw std::invalid_argument("max_conditions must be in [1, 3]");
  }
  if (!(min_support_fraction > 0.0 && min_support_fraction < 1.0)) {
    throw std::invalid_argument("min_support_fraction must be in (0, 1)");
  }
  if (min_error_rate && !(*min_error_rate >= 0.0 && *min_error_rate <= 1.0)) {
    throw std::invalid_argument("min_error_rate must be in [0, 1]");
  }
  if (max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
  if (n_trees < 1) throw std::invalid_argument("n_trees must be >= 1");
  if (bootstrap_resamples < 1) throw std::invalid_argument("bootstrap_resamples must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must be in (0, 1)");
}

void sort_rules(std::vector<Rule>& rules) {
  std::sort(rules.begin(), rules.end(), [](const Rule& a, const Rule& b) {
    if (a.metrics.error_rate != b.metrics.error_rate) return a.metrics.error_rate > b.metrics.error_rate;
    if (a.metrics.support_count != b.metrics.support_count) {
      return a.metrics.support_count > b.metrics.support_count;
    }
    return a.conditions < b.conditions;
  });
}

std::vector<Rule> enumerate_and_evaluate(std::span<const int> candidates,
                                         const std::vector<HighLevelFeature>& high_level,
                                         const Vocabulary& vocab, const FeatureMatrix& matrix,
                                         std::span<const std::uint8_t> errors,
                                         const DiscoveryConfig& config) {
  config.validate();
  const std::size_t n = errors.size();
  if (n == 0 || matrix.rows() != n) throw std::invalid_argument("matrix and errors disagree");
  std::size_t total_errors = 0;
  for (auto e : errors) total_errors += e;
  const double baseline = rate(total_errors, n);
  const RuleLimits limits{config.min_support_fraction, config.min_error_rate.value_or(baseline), n};

  DocBitset error_set(n);
  for (std::size_t d = 0; d < n; ++d) {
    if (errors[d]) error_set.set(d);
  }

  std::vector<Item> items;
  auto add_item = [&](Condition condition, DocBitset docs) {
    Item item{std::move(condition), std::move(docs)};
    item.support = item.docs.count();
    if (!limits.supported(item.support)) return;
    item.errors = item.docs.intersect_count(error_set);
    item.error_rate = rate(item.errors, item.support);
    items.push_back(std::move(item));
  };
  for (int f : candidates) {
    add_item(Condition::token_present(vocab.at(f).tokens),
             DocBitset::from_indices(n, matrix.column(f)));
  }
  for (const auto& feature : high_level) {
    if (feature.buckets.size() != n) throw std::invalid_argument("high-level feature size mismatch");
    for (auto bucket : {Bucket::kLow, Bucket::kMedium, Bucket::kHigh}) {
      DocBitset docs(n);
      for (std::size_t d = 0; d < n; ++d) {
        if (feature.buckets[d] == bucket) docs.set(d);
      }
      add_item(Condition::high_level(feature.name, bucket), std::move(docs));
    }
  }

  std::vector<Kept> kept;
  for (const auto& item : items) {
    if (item.error_rate >= limits.min_error_rate) kept.push_back({{item.condition}, item.docs});
  }

  // Supported pairs, cached for the sub-rule check of triples.
  std::map<std::pair<std::size_t, std::size_t>, double> pair_rates;
  if (config.max_conditions >= 2) {
    for (std::size_t i = 0; i < items.size(); ++i) {
      for (std::size_t j = i + 1; j < items.size(); ++j) {
        if (!compatible(items[i], items[j])) continue;
        const auto support = items[i].docs.intersect_count(items[j].docs);
        if (!limits.supported(support)) continue;
        const auto errs = items[i].docs.intersect_count(items[j].docs, error_set);
        const double r = rate(errs, support);
        pair_rates.emplace(std::make_pair(i, j), r);
        if (r < limits.min_error_rate) continue;
        if (config.prune_redundant && !(r > std::max(items[i].error_rate, items[j].error_rate))) continue;
        kept.push_back({{items[i].condition, items[j].condition}, items[i].docs & items[j].docs});
      }
    }
  }

  if (config.max_conditions >= 3) {
    for (const auto& [ij, rate_ij] : pair_rates) {
      const auto [i, j] = ij;
      const DocBitset both = items[i].docs & items[j].docs;
      for (std::size_t k = j + 1; k < items.size(); ++k) {
        const auto ik = pair_rates.find({i, k});
        const auto jk = pair_rates.find({j, k});
        if (ik == pair_rates.end() || jk == pair_rates.end()) continue;
        const auto support = both.intersect_count(items[k].docs);
        if (!limits.supported(support)) continue;
        const double r = rate(both.intersect_count(items[k].docs, error_set), support);
        if (r < limits.min_error_rate) continue;
        const double best_sub = std::max({items[i].error_rate, items[j].error_rate,
                                          items[k].error_rate, rate_ij, ik->second, jk->second});
        if (config.prune_redundant && !(r > best_sub)) continue;
        kept.push_back({{items[i].condition, items[j].condition, items[k].condition},
                        both & items[k].docs});
      }
    }
  }

  const auto options = config.significance();
  std::vector<Rule> rules;
  rules.reserve(kept.size());
  for (auto& k : kept) {
    const auto members = k.docs.indices();
    rules.push_back({canonical_conditions(std::move(k.conditions), config.max_conditions),
                     evaluate_subpopulation(members, errors, baseline, options)});
  }
  sort_rules(rules);
  return rules;
}

RuleSet discover(const DatasetStore& store, const Vocabulary& vocab, const FeatureMatrix& matrix,
                 const std::vector<HighLevelFeature>& high_level, const DiscoveryConfig& config) {
  config.validate();
  const auto& errors = store.error_labels();
  RuleSet result;
  result.n_test = errors.size();
  result.baseline_error_rate = store.baseline_error_rate();
  result.min_error_rate = config.min_error_rate.value_or(result.baseline_error_rate);
  // No subpopulation can differ from a model that is always right or always wrong.
  if (store.error_count() == 0 || store.error_count() == errors.size()) return result;

  std::vector<int> candidates;
  if (config.use_forest_filter) {
    const auto forest = train_filter_forest(matrix, errors, config.forest());
    candidates = select_candidates(forest, config.candidate_cap);
  } else {
    candidates.resize(vocab.size());
    for (std::size_t f = 0; f < vocab.size(); ++f) candidates[f] = static_cast<int>(f);
  }
  result.candidate_count = candidates.size();
  result.rules = enumerate_and_evaluate(candidates, high_level, vocab, matrix, errors, config);

  for (const auto& rule : result.rules) {
    const auto& m = rule.metrics;
    if (rule.conditions.empty() || rule.conditions.size() > config.max_conditions ||
        m.support_fraction < config.min_support_fraction || m.error_rate < result.min_error_rate ||
        m.ci_low > m.ci_high) {
      throw std::logic_error("discovered rule violates its thresholds: " + describe(rule.conditions));
    }
  }
  return result;
}

}  // namespace errscope
