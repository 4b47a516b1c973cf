#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "errscope/ingest.hpp"
#include "errscope/text.hpp"

namespace errscope {

// Normalized token sequences for every record, one sequence per text part.
// Index i of test()/train() matches DatasetStore::test()/train().
class TokenizedCorpus {
 public:
  using Parts = std::vector<std::vector<std::string>>;

  static TokenizedCorpus build(const DatasetStore& store);

  const std::vector<Parts>& test() const { return test_; }
  const std::vector<Parts>& train() const { return train_; }

 private:
  std::vector<Parts> test_;
  std::vector<Parts> train_;
};

bool parts_contain(const TokenizedCorpus::Parts& parts, const NGram& ngram);

struct TokenFeature {
  NGram tokens;
  int id = 0;
  std::size_t doc_frequency_test = 0;
  std::map<std::string, std::size_t> doc_frequency_train_by_label;
};

class Vocabulary {
 public:
  Vocabulary() = default;
  // `features` must be sorted by token tuple with ids 0..n-1.
  explicit Vocabulary(std::vector<TokenFeature> features);

  const std::vector<TokenFeature>& features() const { return features_; }
  const TokenFeature& at(int id) const { return features_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return features_.size(); }
  bool empty() const { return features_.empty(); }
  std::optional<int> find(const NGram& tokens) const;
  int max_ngram() const { return max_ngram_; }

 private:
  std::vector<TokenFeature> features_;
  std::map<NGram, int> index_;
  int max_ngram_ = 1;
};

// max(2, ceil(0.5% of test docs)).
std::size_t default_min_df(std::size_t n_test);

// Every n-gram with test-split document frequency >= min_df, ids in
// lexicographic order of token tuples. Throws std::invalid_argument when the
// result would be empty.
Vocabulary build_vocabulary(const DatasetStore& store, const TokenizedCorpus& corpus,
                            std::size_t min_df, int n_max = kMaxNGram);
Vocabulary build_vocabulary(const DatasetStore& store, std::size_t min_df, int n_max = kMaxNGram);

// Sparse binary test-document x token-feature incidence, stored both by row and
// by column. Both index lists are sorted.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t n_cols, std::vector<std::vector<int>> rows);

  std::size_t rows() const { return rows_.size(); }
  std::size_t cols() const { return cols_.size(); }
  std::span<const int> row(std::size_t doc) const { return rows_.at(doc); }
  std::span<const std::size_t> column(int feature) const {
    return cols_.at(static_cast<std::size_t>(feature));
  }
  bool cell(std::size_t doc, int feature) const;

 private:
  std::vector<std::vector<int>> rows_;
  std::vector<std::vector<std::size_t>> cols_;
};

FeatureMatrix build_feature_matrix(const DatasetStore& store, const TokenizedCorpus& corpus,
                                   const Vocabulary& vocab);
FeatureMatrix build_feature_matrix(const DatasetStore& store, const Vocabulary& vocab);

enum class Bucket { kLow, kMedium, kHigh };

std::string to_string(Bucket bucket);
std::optional<Bucket> parse_bucket(std::string_view text);

struct Thresholds {
  double low = 0.0;
  double high = 0.0;
};

struct Bucketing {
  Thresholds thresholds;
  std::vector<Bucket> buckets;
};

inline constexpr std::size_t kMinBucketValues = 10;

// Nearest-rank percentile: the value at rank ceil(p/100 * n) of the sorted
// input (1-based, clamped to [1, n]).
double nearest_rank_percentile(std::span<const double> sorted, int percentile);

Bucket bucket_of(double value, const Thresholds& thresholds);

// Throws std::invalid_argument("insufficient data for bucketing") for fewer than
// 10 values.
Bucketing bucketize(std::span<const double> values, int p_low = 10, int p_high = 90);

inline constexpr std::string_view kDocLengthFeature = "doc_length";
inline constexpr std::string_view kOverlapFeature = "overlap";

struct HighLevelFeature {
  std::string name;
  std::vector<double> values;  // one per test record
  Thresholds thresholds;
  std::vector<Bucket> buckets;

  Bucket bucket_for(double value) const { return bucket_of(value, thresholds); }
};

double doc_length(const TokenizedCorpus::Parts& parts);
// |T1 ∩ T2| / |T2| over unigram sets; 0 when the hypothesis has no tokens.
double word_overlap(const TokenizedCorpus::Parts& parts);

// doc_length always, overlap when every test record has two parts, then each
// ingested feature in name order; all bucketized over the test split.
std::vector<HighLevelFeature> compute_high_level_features(const DatasetStore& store,
                                                          const TokenizedCorpus& corpus);
std::vector<HighLevelFeature> compute_high_level_features(const DatasetStore& store);

// Value of a named high-level feature for any record (train records included);
// nullopt when it cannot be computed for that record.
std::optional<double> high_level_value(std::string_view name, const DocumentRecord& record,
                                       const TokenizedCorpus::Parts& parts);

const HighLevelFeature* find_high_level(const std::vector<HighLevelFeature>& features,
                                        std::string_view name);

}  // namespace errscope
