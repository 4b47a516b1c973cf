#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "errscope/ingest.hpp"

namespace errscope {

struct TokenCounts {
  std::size_t positive = 0;  // cnt_pos
  std::size_t negative = 0;  // cnt_neg

  bool operator==(const TokenCounts&) const = default;
};

struct AggregatedAttribution {
  std::string class_name;
  std::size_t subpop_size = 0;
  std::map<std::string, TokenCounts> tokens;

  bool operator==(const AggregatedAttribution&) const = default;
};

// Counts, per token, the subpopulation documents whose retained attribution
// list for `class_name` holds that token with a positive (negative) score. A
// document contributes once per token, with the sign of its highest-ranked
// entry for the token; zero scores count in neither bucket. Throws
// std::invalid_argument for an unknown class or a document index outside the
// test split.
AggregatedAttribution aggregate_counts(std::span<const std::size_t> subpop,
                                       const std::string& class_name, const DatasetStore& store);

// Tokens sorted by cnt_pos descending when positive counts dominate (ties
// included), otherwise by cnt_neg descending; equal counts by token.
std::vector<std::string> chart_order(const AggregatedAttribution& aggregated);

}  // namespace errscope
