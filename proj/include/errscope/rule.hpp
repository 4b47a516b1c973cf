#pragma once

#include <compare>
#include <cstddef>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "errscope/features.hpp"
#include "errscope/text.hpp"

namespace errscope {

// Conditions are presence or bucket tests only; there is no negated form.
enum class ConditionKind { kToken = 0, kConcept = 1, kHighLevel = 2 };

struct Condition {
  ConditionKind kind = ConditionKind::kToken;
  NGram tokens;         // kToken
  int concept_id = -1;  // kConcept
  std::string feature;  // kHighLevel
  Bucket bucket = Bucket::kMedium;

  static Condition token_present(NGram tokens);
  static Condition concept_present(int id);
  static Condition high_level(std::string feature, Bucket bucket);

  // Canonical order: kind, then token tuple / concept id / (feature, bucket).
  auto operator<=>(const Condition&) const = default;
};

// Text forms: "token:want to", "concept:3", "high:overlap=low".
std::string to_string(const Condition& condition);
// Throws std::invalid_argument on malformed input.
Condition parse_condition(std::string_view text);

struct RuleMetrics {
  std::size_t support_count = 0;
  std::size_t error_count = 0;
  double support_fraction = 0.0;
  double error_rate = 0.0;
  double p_value = 1.0;
  double ci_low = 0.0;
  double ci_high = 0.0;

  // Empty subpopulations carry no rate, p-value or interval.
  bool defined() const { return support_count > 0; }
  bool operator==(const RuleMetrics&) const = default;
};

struct Rule {
  std::vector<Condition> conditions;
  RuleMetrics metrics;

  bool operator==(const Rule&) const = default;
};

inline constexpr std::size_t kMaxConditionsLimit = 3;

// Sorts conditions canonically. Throws std::invalid_argument for empty,
// duplicate, or over-long condition lists.
std::vector<Condition> canonical_conditions(std::vector<Condition> conditions,
                                            std::size_t max_conditions = kMaxConditionsLimit);

std::string describe(const std::vector<Condition>& conditions);

// Line format: support_count, support_fraction, error_rate, p_value, ci_low,
// ci_high, condition... Numbers use the shortest round-trip representation.
std::string format_rule_line(const Rule& rule);
Rule parse_rule_line(std::string_view line);

struct RuleReport {
  std::map<std::string, std::string> meta;  // "# key=value" header lines
  std::vector<Rule> rules;
};

void write_rule_report(std::ostream& out, const RuleReport& report);
RuleReport read_rule_report(std::istream& in);

std::string format_double(double value);

}  // namespace errscope
