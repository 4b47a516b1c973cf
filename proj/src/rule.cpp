#include "errscope/rule.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace errscope {

namespace {

constexpr std::string_view kSeparator = ", ";

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(kSeparator, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + kSeparator.size();
  }
  return fields;
}

template <typename T>
T parse_number(std::string_view text, const char* what) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::invalid_argument(std::string("bad ") + what + " '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

Condition Condition::token_present(NGram tokens) {
  Condition c;
  c.kind = ConditionKind::kToken;
  c.tokens = std::move(tokens);
  return c;
}

Condition Condition::concept_present(int id) {
  Condition c;
  c.kind = ConditionKind::kConcept;
  c.concept_id = id;
  return c;
}

Condition Condition::high_level(std::string feature, Bucket bucket) {
  Condition c;
  c.kind = ConditionKind::kHighLevel;
  c.feature = std::move(feature);
  c.bucket = bucket;
  return c;
}

std::string to_string(const Condition& condition) {
  switch (condition.kind) {
    case ConditionKind::kToken:
      return "token:" + join_ngram(condition.tokens);
    case ConditionKind::kConcept:
      return "concept:" + std::to_string(condition.concept_id);
    case ConditionKind::kHighLevel:
      return "high:" + condition.feature + "=" + to_string(condition.bucket);
  }
  return {};
}

Condition parse_condition(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw std::invalid_argument("condition '" + std::string(text) + "' lacks a kind prefix");
  }
  const auto kind = text.substr(0, colon);
  const auto body = text.substr(colon + 1);
  if (kind == "token") return Condition::token_present(parse_ngram(body));
  if (kind == "concept") return Condition::concept_present(parse_number<int>(body, "concept id"));
  if (kind == "high") {
    const auto eq = body.rfind('=');
    if (eq == std::string_view::npos || eq == 0) {
      throw std::invalid_argument("high-level condition must be 'high:<feature>=<bucket>'");
    }
    const auto bucket = parse_bucket(body.substr(eq + 1));
    if (!bucket) throw std::invalid_argument("unknown bucket '" + std::string(body.substr(eq + 1)) + "'");
    return Condition::high_level(std::string(body.substr(0, eq)), *bucket);
  }
  throw std::invalid_argument("unknown condition kind '" + std::string(kind) + "'");
}

std::vector<Condition> canonical_conditions(std::vector<Condition> conditions,
                                            std::size_t max_conditions) {
  if (conditions.empty()) throw std::invalid_argument("a rule needs at least one condition");
  if (conditions.size() > max_conditions) {
    throw std::invalid_argument("a rule may have at most " + std::to_string(max_conditions) +
                                " conditions");
  }
  std::sort(conditions.begin(), conditions.end());
  if (std::adjacent_find(conditions.begin(), conditions.end()) != conditions.end()) {
    throw std::invalid_argument("duplicate condition in rule");
  }
  return conditions;
}

std::string describe(const std::vector<Condition>& conditions) {
  std::string out;
  for (const auto& c : conditions) {
    if (!out.empty()) out += " AND ";
    out += to_string(c);
  }
  return out;
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

std::string format_rule_line(const Rule& rule) {
  const auto& m = rule.metrics;
  std::string line = std::to_string(m.support_count);
  for (double v : {m.support_fraction, m.error_rate, m.p_value, m.ci_low, m.ci_high}) {
    line += kSeparator;
    line += format_double(v);
  }
  for (const auto& c : rule.conditions) {
    line += kSeparator;
    line += to_string(c);
  }
  return line;
}

Rule parse_rule_line(std::string_view line) {
  const auto fields = split_fields(line);
  if (fields.size() < 7) throw std::invalid_argument("rule line has too few fields");
  Rule rule;
  auto& m = rule.metrics;
  m.support_count = parse_number<std::size_t>(fields[0], "support_count");
  m.support_fraction = parse_number<double>(fields[1], "support_fraction");
  m.error_rate = parse_number<double>(fields[2], "error_rate");
  m.p_value = parse_number<double>(fields[3], "p_value");
  m.ci_low = parse_number<double>(fields[4], "ci_low");
  m.ci_high = parse_number<double>(fields[5], "ci_high");
  m.error_count = static_cast<std::size_t>(
      std::llround(m.error_rate * static_cast<double>(m.support_count)));
  for (std::size_t i = 6; i < fields.size(); ++i) {
    rule.conditions.push_back(parse_condition(fields[i]));
  }
  return rule;
}

void write_rule_report(std::ostream& out, const RuleReport& report) {
  for (const auto& [key, value] : report.meta) out << "# " << key << '=' << value << '\n';
  out << "# columns: support_count, support_fraction, error_rate, p_value, ci_low, ci_high, "
         "conditions...\n";
  for (const auto& rule : report.rules) out << format_rule_line(rule) << '\n';
}

RuleReport read_rule_report(std::istream& in) {
  RuleReport report;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto eq = line.find('=');
      if (line.rfind("# ", 0) == 0 && eq != std::string::npos) {
        report.meta[line.substr(2, eq - 2)] = line.substr(eq + 1);
      }
      continue;
    }
    report.rules.push_back(parse_rule_line(line));
  }
  return report;
}

}  // namespace errscope
