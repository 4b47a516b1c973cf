#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "errscope/discovery.hpp"
#include "errscope/doc_bitset.hpp"
#include "errscope/features.hpp"
#include "errscope/ingest.hpp"
#include "errscope/rule.hpp"
#include "errscope/significance.hpp"

namespace errscope {

// Read-only bundle of everything derived from a store: tokenized text,
// vocabulary, feature matrix and bucketed high-level features.
class Workspace {
 public:
  static std::shared_ptr<const Workspace> build(DatasetStore store,
                                                std::optional<std::size_t> min_df = std::nullopt);

  const DatasetStore& store() const { return store_; }
  const TokenizedCorpus& corpus() const { return corpus_; }
  const Vocabulary& vocab() const { return vocab_; }
  const FeatureMatrix& matrix() const { return matrix_; }
  const std::vector<HighLevelFeature>& high_level() const { return high_level_; }
  std::size_t min_df() const { return min_df_; }

 private:
  explicit Workspace(DatasetStore store) : store_(std::move(store)) {}

  DatasetStore store_;
  TokenizedCorpus corpus_;
  Vocabulary vocab_;
  FeatureMatrix matrix_;
  std::vector<HighLevelFeature> high_level_;
  std::size_t min_df_ = 0;
};

struct Concept {
  int id = 0;
  std::string name;
  std::vector<NGram> tokens;  // non-empty; a document matches if it holds any
};

using ConceptMap = std::map<int, Concept>;

// Single-writer, multi-reader store of user concepts for one session.
class ConceptRegistry {
 public:
  // Throws ValidationError for an empty or duplicate name or an empty token
  // list, std::invalid_argument for phrases longer than three tokens.
  Concept create(const std::string& name, const std::vector<std::string>& phrases);
  Concept update(int id, const std::string& name, const std::vector<std::string>& phrases);
  std::optional<Concept> get(int id) const;
  ConceptMap snapshot() const;

 private:
  std::vector<NGram> parse_phrases(const std::vector<std::string>& phrases) const;
  void check_name(const std::string& name, int self_id) const;

  mutable std::shared_mutex mutex_;
  ConceptMap concepts_;
  int next_id_ = 1;
};

// Throws ValidationError naming an unknown high-level feature or a dangling
// concept id.
void validate_conditions(const std::vector<Condition>& conditions, const Workspace& ws,
                         const ConceptMap& concepts);

// Test documents satisfying every condition; an empty list matches all.
DocBitset matching_test_docs(const std::vector<Condition>& conditions, const Workspace& ws,
                             const ConceptMap& concepts);

// Evaluates a rule against any record of the store. Test records use the
// feature matrix and stored buckets; train records are scanned directly and
// bucketed with the test-split thresholds.
bool match_rule(const std::vector<Condition>& conditions, const DocumentRecord& doc,
                const Workspace& ws, const ConceptMap& concepts);

struct RuleEvaluation {
  std::vector<Condition> conditions;
  std::vector<std::size_t> members;  // sorted test indices
  RuleMetrics metrics;
};

RuleEvaluation evaluate_rule(std::vector<Condition> conditions, const Workspace& ws,
                             const ConceptMap& concepts, const SignificanceOptions& options,
                             std::size_t max_conditions = kMaxConditionsLimit);

struct SubpopulationStats {
  std::size_t size = 0;
  std::size_t error_count = 0;
  std::map<std::string, std::size_t> size_by_label;
  std::map<std::string, std::size_t> errors_by_label;
  std::map<std::string, std::size_t> errors_by_prediction;
  // feature -> errors in the low, medium and high buckets
  std::map<std::string, std::array<std::size_t, 3>> errors_by_bucket;
  // condition text -> training label -> documents containing it
  std::map<std::string, std::map<std::string, std::size_t>> train_frequency;
  std::size_t train_size = 0;  // training documents matching the rule
};

// Statistics over the matching test documents; an empty rule describes the
// whole test split. Empty subpopulations give size 0 and empty breakdowns.
SubpopulationStats subpopulation_stats(const std::vector<Condition>& conditions, const Workspace& ws,
                                       const ConceptMap& concepts);

struct ConceptSummary {
  int concept_id = 0;
  std::string name;
  RuleMetrics metrics;  // support_count == 0 marks undefined rates
};

ConceptSummary evaluate_concept(const Concept& concept_def, const Workspace& ws,
                                const SignificanceOptions& options);

struct ConceptOverlap {
  int first = 0;
  int second = 0;
  bool overlap = false;  // confidence intervals intersect
};

struct ConceptComparison {
  std::vector<ConceptSummary> concepts;
  std::vector<ConceptOverlap> pairs;
};

bool intervals_overlap(double lo_a, double hi_a, double lo_b, double hi_b);

// Throws std::invalid_argument for fewer than two concepts.
ConceptComparison compare_concepts(std::vector<ConceptSummary> summaries);

struct OverviewReport {
  std::size_t n_test = 0;
  double accuracy = 0.0;
  double baseline_error_rate = 0.0;
  std::vector<Rule> top_tokens;      // at most 10 single-token rules
  std::vector<Rule> top_high_level;  // at most 5 single-bucket rules
};

OverviewReport overview(const RuleSet& ruleset, const std::vector<HighLevelFeature>& high_level,
                        const DatasetStore& store);

struct Highlight {
  std::size_t part = 0;
  std::size_t begin = 0;  // byte offsets into texts[part]
  std::size_t end = 0;
  std::string token;      // the rule n-gram, space-joined
};

struct DocumentView {
  std::size_t index = 0;  // test index
  bool error = false;
  std::vector<Highlight> highlights;
};

struct DocumentPage {
  std::size_t total = 0;
  std::size_t page = 1;
  std::size_t page_size = 0;
  std::vector<DocumentView> documents;
};

// Spans of every occurrence of `ngram` in `text`.
std::vector<std::pair<std::size_t, std::size_t>> find_ngram_spans(std::string_view text,
                                                                 const NGram& ngram);

// Matching test documents, mispredicted first, ordered by id within each
// group; page is 1-based and pages past the end are empty.
DocumentPage document_page(const std::vector<Condition>& conditions, std::size_t page,
                           std::size_t page_size, const Workspace& ws, const ConceptMap& concepts);

}  // namespace errscope
