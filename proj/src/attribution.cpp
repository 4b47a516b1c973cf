#include "errscope/attribution.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace errscope {

AggregatedAttribution aggregate_counts(std::span<const std::size_t> subpop,
                                       const std::string& class_name, const DatasetStore& store) {
  if (!store.has_class(class_name)) throw std::invalid_argument("unknown class '" + class_name + "'");
  AggregatedAttribution out;
  out.class_name = class_name;
  out.subpop_size = subpop.size();
  for (auto d : subpop) {
    if (d >= store.test().size()) throw std::invalid_argument("document index is not a test record");
    const auto& attributions = store.test()[d].attributions;
    const auto it = attributions.find(class_name);
    if (it == attributions.end()) continue;
    // Entries are ordered by |score| after ingest, so the first one per token wins.
    std::set<std::string> seen;
    for (const auto& entry : it->second) {
      if (!seen.insert(entry.token).second) continue;
      auto& counts = out.tokens[entry.token];
      if (entry.score > 0.0) {
        ++counts.positive;
      } else if (entry.score < 0.0) {
        ++counts.negative;
      }
    }
  }
  return out;
}

std::vector<std::string> chart_order(const AggregatedAttribution& aggregated) {
  std::size_t total_pos = 0, total_neg = 0;
  std::vector<std::pair<std::string, TokenCounts>> rows(aggregated.tokens.begin(),
                                                        aggregated.tokens.end());
  for (const auto& [token, c] : rows) {
    total_pos += c.positive;
    total_neg += c.negative;
  }
  const bool by_positive = total_pos >= total_neg;
  std::stable_sort(rows.begin(), rows.end(), [by_positive](const auto& a, const auto& b) {
    const auto ka = by_positive ? a.second.positive : a.second.negative;
    const auto kb = by_positive ? b.second.positive : b.second.negative;
    return ka > kb;
  });
  std::vector<std::string> order;
  order.reserve(rows.size());
  for (auto& row : rows) order.push_back(std::move(row.first));
  return order;
}

}  // namespace errscope
