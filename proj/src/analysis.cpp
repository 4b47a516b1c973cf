#include "errscope/analysis.hpp"

#include <algorithm>
#include <mutex>
#include <set>
#include <tuple>
#include <stdexcept>

namespace errscope {

namespace {

std::size_t bucket_slot(Bucket b) { return static_cast<std::size_t>(b); }

DocBitset token_docs(const NGram& tokens, const Workspace& ws) {
  const std::size_t n = ws.store().test().size();
  if (const auto id = ws.vocab().find(tokens)) {
    return DocBitset::from_indices(n, ws.matrix().column(*id));
  }
  DocBitset docs(n);
  const auto& parts = ws.corpus().test();
  for (std::size_t d = 0; d < n; ++d) {
    if (parts_contain(parts[d], tokens)) docs.set(d);
  }
  return docs;
}

const Concept& find_concept(int id, const ConceptMap& concepts) {
  const auto it = concepts.find(id);
  if (it == concepts.end()) throw ValidationError("unknown concept id " + std::to_string(id));
  return it->second;
}

const HighLevelFeature& find_feature(const std::string& name, const Workspace& ws) {
  const auto* feature = find_high_level(ws.high_level(), name);
  if (!feature) throw ValidationError("unknown high-level feature '" + name + "'");
  return *feature;
}

DocBitset condition_docs(const Condition& c, const Workspace& ws, const ConceptMap& concepts) {
  const std::size_t n = ws.store().test().size();
  switch (c.kind) {
    case ConditionKind::kToken:
      return token_docs(c.tokens, ws);
    case ConditionKind::kConcept: {
      DocBitset docs(n);
      for (const auto& tokens : find_concept(c.concept_id, concepts).tokens) docs |= token_docs(tokens, ws);
      return docs;
    }
    case ConditionKind::kHighLevel: {
      const auto& feature = find_feature(c.feature, ws);
      DocBitset docs(n);
      for (std::size_t d = 0; d < n; ++d) {
        if (feature.buckets[d] == c.bucket) docs.set(d);
      }
      return docs;
    }
  }
  return DocBitset(n);
}

bool parts_match(const Condition& c, const DocumentRecord& doc, const TokenizedCorpus::Parts& parts,
                 const Workspace& ws, const ConceptMap& concepts) {
  switch (c.kind) {
    case ConditionKind::kToken:
      return parts_contain(parts, c.tokens);
    case ConditionKind::kConcept: {
      const auto& tokens = find_concept(c.concept_id, concepts).tokens;
      return std::any_of(tokens.begin(), tokens.end(),
                         [&](const NGram& t) { return parts_contain(parts, t); });
    }
    case ConditionKind::kHighLevel: {
      const auto& feature = find_feature(c.feature, ws);
      const auto value = high_level_value(c.feature, doc, parts);
      return value && feature.bucket_for(*value) == c.bucket;
    }
  }
  return false;
}

TokenizedCorpus::Parts tokenize_record(const DocumentRecord& doc) {
  TokenizedCorpus::Parts parts;
  for (const auto& text : doc.texts) parts.push_back(tokenize(text));
  return parts;
}

}  // namespace

std::shared_ptr<const Workspace> Workspace::build(DatasetStore store,
                                                  std::optional<std::size_t> min_df) {
  auto ws = std::shared_ptr<Workspace>(new Workspace(std::move(store)));
  ws->corpus_ = TokenizedCorpus::build(ws->store_);
  ws->min_df_ = min_df.value_or(default_min_df(ws->store_.test().size()));
  ws->vocab_ = build_vocabulary(ws->store_, ws->corpus_, ws->min_df_);
  ws->matrix_ = build_feature_matrix(ws->store_, ws->corpus_, ws->vocab_);
  ws->high_level_ = compute_high_level_features(ws->store_, ws->corpus_);
  return ws;
}

std::vector<NGram> ConceptRegistry::parse_phrases(const std::vector<std::string>& phrases) const {
  std::set<NGram> unique;
  for (const auto& phrase : phrases) unique.insert(parse_ngram(phrase));
  if (unique.empty()) throw ValidationError("a concept needs at least one token");
  return {unique.begin(), unique.end()};
}

void ConceptRegistry::check_name(const std::string& name, int self_id) const {
  if (name.empty()) throw ValidationError("concept name must be non-empty");
  for (const auto& [id, c] : concepts_) {
    if (id != self_id && c.name == name) throw ValidationError("concept '" + name + "' already exists");
  }
}

Concept ConceptRegistry::create(const std::string& name, const std::vector<std::string>& phrases) {
  auto tokens = parse_phrases(phrases);
  std::unique_lock lock(mutex_);
  check_name(name, -1);
  Concept c{next_id_++, name, std::move(tokens)};
  concepts_.emplace(c.id, c);
  return c;
}

Concept ConceptRegistry::update(int id, const std::string& name,
                                const std::vector<std::string>& phrases) {
  auto tokens = parse_phrases(phrases);
  std::unique_lock lock(mutex_);
  const auto it = concepts_.find(id);
  if (it == concepts_.end()) throw ValidationError("unknown concept id " + std::to_string(id));
  check_name(name, id);
  it->second.name = name;
  it->second.tokens = std::move(tokens);
  return it->second;
}

std::optional<Concept> ConceptRegistry::get(int id) const {
  std::shared_lock lock(mutex_);
  const auto it = concepts_.find(id);
  if (it == concepts_.end()) return std::nullopt;
  return it->second;
}

ConceptMap ConceptRegistry::snapshot() const {
  std::shared_lock lock(mutex_);
  return concepts_;
}

void validate_conditions(const std::vector<Condition>& conditions, const Workspace& ws,
                         const ConceptMap& concepts) {
  for (const auto& c : conditions) {
    switch (c.kind) {
      case ConditionKind::kToken:
        if (c.tokens.empty() || c.tokens.size() > static_cast<std::size_t>(kMaxNGram)) {
          throw ValidationError("token conditions need 1 to 3 tokens");
        }
        break;
      case ConditionKind::kConcept:
        find_concept(c.concept_id, concepts);
        break;
      case ConditionKind::kHighLevel:
        find_feature(c.feature, ws);
        break;
    }
  }
}

DocBitset matching_test_docs(const std::vector<Condition>& conditions, const Workspace& ws,
                             const ConceptMap& concepts) {
  validate_conditions(conditions, ws, concepts);
  auto docs = DocBitset::full(ws.store().test().size());
  for (const auto& c : conditions) docs &= condition_docs(c, ws, concepts);
  return docs;
}

bool match_rule(const std::vector<Condition>& conditions, const DocumentRecord& doc,
                const Workspace& ws, const ConceptMap& concepts) {
  validate_conditions(conditions, ws, concepts);
  if (doc.split == Split::kTest) {
    if (const auto index = ws.store().find_test(doc.id)) {
      return std::all_of(conditions.begin(), conditions.end(), [&](const Condition& c) {
        switch (c.kind) {
          case ConditionKind::kToken:
            if (const auto id = ws.vocab().find(c.tokens)) return ws.matrix().cell(*index, *id);
            return parts_contain(ws.corpus().test()[*index], c.tokens);
          case ConditionKind::kHighLevel:
            return find_feature(c.feature, ws).buckets[*index] == c.bucket;
          case ConditionKind::kConcept:
            return parts_match(c, doc, ws.corpus().test()[*index], ws, concepts);
        }
        return false;
      });
    }
  }
  const auto parts = tokenize_record(doc);
  return std::all_of(conditions.begin(), conditions.end(),
                     [&](const Condition& c) { return parts_match(c, doc, parts, ws, concepts); });
}

RuleEvaluation evaluate_rule(std::vector<Condition> conditions, const Workspace& ws,
                             const ConceptMap& concepts, const SignificanceOptions& options,
                             std::size_t max_conditions) {
  RuleEvaluation out;
  out.conditions = canonical_conditions(std::move(conditions), max_conditions);
  out.members = matching_test_docs(out.conditions, ws, concepts).indices();
  out.metrics = evaluate_subpopulation(out.members, ws.store().error_labels(),
                                       ws.store().baseline_error_rate(), options);
  return out;
}

SubpopulationStats subpopulation_stats(const std::vector<Condition>& conditions, const Workspace& ws,
                                       const ConceptMap& concepts) {
  const auto& store = ws.store();
  SubpopulationStats stats;
  for (auto d : matching_test_docs(conditions, ws, concepts).indices()) {
    const auto& rec = store.test()[d];
    ++stats.size;
    ++stats.size_by_label[rec.label];
    if (!store.error_labels()[d]) continue;
    ++stats.error_count;
    ++stats.errors_by_label[rec.label];
    ++stats.errors_by_prediction[*rec.prediction];
    for (const auto& feature : ws.high_level()) {
      ++stats.errors_by_bucket[feature.name][bucket_slot(feature.buckets[d])];
    }
  }

  for (std::size_t t = 0; t < store.train().size(); ++t) {
    const auto& rec = store.train()[t];
    const auto& parts = ws.corpus().train()[t];
    bool all = true;
    for (const auto& c : conditions) {
      const bool hit = parts_match(c, rec, parts, ws, concepts);
      all = all && hit;
      if (c.kind != ConditionKind::kHighLevel) {
        auto& by_label = stats.train_frequency[to_string(c)];
        if (hit) ++by_label[rec.label];
      }
    }
    if (all) ++stats.train_size;
  }
  return stats;
}

ConceptSummary evaluate_concept(const Concept& concept_def, const Workspace& ws,
                                const SignificanceOptions& options) {
  if (concept_def.tokens.empty()) throw ValidationError("a concept needs at least one token");
  DocBitset docs(ws.store().test().size());
  for (const auto& tokens : concept_def.tokens) docs |= token_docs(tokens, ws);
  const auto members = docs.indices();
  return {concept_def.id, concept_def.name,
          evaluate_subpopulation(members, ws.store().error_labels(),
                                 ws.store().baseline_error_rate(), options)};
}

bool intervals_overlap(double lo_a, double hi_a, double lo_b, double hi_b) {
  return std::max(lo_a, lo_b) <= std::min(hi_a, hi_b);
}

ConceptComparison compare_concepts(std::vector<ConceptSummary> summaries) {
  if (summaries.size() < 2) throw std::invalid_argument("comparison needs at least two concepts");
  ConceptComparison out;
  out.concepts = std::move(summaries);
  for (std::size_t i = 0; i < out.concepts.size(); ++i) {
    for (std::size_t j = i + 1; j < out.concepts.size(); ++j) {
      const auto& a = out.concepts[i].metrics;
      const auto& b = out.concepts[j].metrics;
      const bool both = a.defined() && b.defined();
      out.pairs.push_back({out.concepts[i].concept_id, out.concepts[j].concept_id,
                           both && intervals_overlap(a.ci_low, a.ci_high, b.ci_low, b.ci_high)});
    }
  }
  return out;
}

OverviewReport overview(const RuleSet& ruleset, const std::vector<HighLevelFeature>& high_level,
                        const DatasetStore& store) {
  OverviewReport report;
  report.n_test = store.test().size();
  report.baseline_error_rate = store.baseline_error_rate();
  report.accuracy = 1.0 - report.baseline_error_rate;

  std::vector<Rule> singles;
  for (const auto& rule : ruleset.rules) {
    if (rule.conditions.size() == 1) singles.push_back(rule);
  }
  sort_rules(singles);
  for (const auto& rule : singles) {
    const auto& c = rule.conditions.front();
    if (c.kind == ConditionKind::kToken && report.top_tokens.size() < 10) {
      report.top_tokens.push_back(rule);
    } else if (c.kind == ConditionKind::kHighLevel && report.top_high_level.size() < 5 &&
               find_high_level(high_level, c.feature)) {
      report.top_high_level.push_back(rule);
    }
  }
  return report;
}

std::vector<std::pair<std::size_t, std::size_t>> find_ngram_spans(std::string_view text,
                                                                 const NGram& ngram) {
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  if (ngram.empty()) return spans;
  const auto tokens = tokenize_with_spans(text);
  for (std::size_t i = 0; i + ngram.size() <= tokens.size(); ++i) {
    bool hit = true;
    for (std::size_t k = 0; k < ngram.size() && hit; ++k) hit = tokens[i + k].token == ngram[k];
    if (hit) spans.emplace_back(tokens[i].begin, tokens[i + ngram.size() - 1].end);
  }
  return spans;
}

DocumentPage document_page(const std::vector<Condition>& conditions, std::size_t page,
                           std::size_t page_size, const Workspace& ws, const ConceptMap& concepts) {
  if (page < 1) throw std::invalid_argument("page is 1-based");
  if (page_size < 1) throw std::invalid_argument("page_size must be positive");
  const auto& store = ws.store();
  auto members = matching_test_docs(conditions, ws, concepts).indices();
  std::stable_sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
    const bool ea = store.error_labels()[a], eb = store.error_labels()[b];
    if (ea != eb) return ea;
    return store.test()[a].id < store.test()[b].id;
  });

  std::vector<NGram> highlight_tokens;
  for (const auto& c : conditions) {
    if (c.kind == ConditionKind::kToken) highlight_tokens.push_back(c.tokens);
    if (c.kind == ConditionKind::kConcept) {
      for (const auto& t : find_concept(c.concept_id, concepts).tokens) highlight_tokens.push_back(t);
    }
  }

  DocumentPage out;
  out.total = members.size();
  out.page = page;
  out.page_size = page_size;
  const std::size_t start = (page - 1) * page_size;
  for (std::size_t i = start; i < members.size() && i < start + page_size; ++i) {
    const auto d = members[i];
    DocumentView view{d, store.error_labels()[d] != 0, {}};
    const auto& texts = store.test()[d].texts;
    for (std::size_t part = 0; part < texts.size(); ++part) {
      for (const auto& tokens : highlight_tokens) {
        for (const auto& [b, e] : find_ngram_spans(texts[part], tokens)) {
          view.highlights.push_back({part, b, e, join_ngram(tokens)});
        }
      }
    }
    std::sort(view.highlights.begin(), view.highlights.end(), [](const Highlight& a, const Highlight& b) {
      return std::tie(a.part, a.begin, a.end, a.token) < std::tie(b.part, b.begin, b.end, b.token);
    });
    out.documents.push_back(std::move(view));
  }
  return out;
}

}  // namespace errscope
