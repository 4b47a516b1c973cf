#include "errscope/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <stdexcept>

namespace errscope {

namespace {

TokenizedCorpus::Parts tokenize_parts(const DocumentRecord& rec) {
  TokenizedCorpus::Parts parts;
  parts.reserve(rec.texts.size());
  for (const auto& text : rec.texts) parts.push_back(tokenize(text));
  return parts;
}

std::set<NGram> document_ngrams(const TokenizedCorpus::Parts& parts, int n_max) {
  std::set<NGram> grams;
  for (const auto& part : parts) append_ngrams(part, n_max, grams);
  return grams;
}

}  // namespace

TokenizedCorpus TokenizedCorpus::build(const DatasetStore& store) {
  TokenizedCorpus corpus;
  corpus.test_.reserve(store.test().size());
  for (const auto& rec : store.test()) corpus.test_.push_back(tokenize_parts(rec));
  corpus.train_.reserve(store.train().size());
  for (const auto& rec : store.train()) corpus.train_.push_back(tokenize_parts(rec));
  return corpus;
}

bool parts_contain(const TokenizedCorpus::Parts& parts, const NGram& ngram) {
  return std::any_of(parts.begin(), parts.end(),
                     [&](const auto& part) { return contains_ngram(part, ngram); });
}

Vocabulary::Vocabulary(std::vector<TokenFeature> features) : features_(std::move(features)) {
  for (const auto& f : features_) {
    index_.emplace(f.tokens, f.id);
    max_ngram_ = std::max(max_ngram_, static_cast<int>(f.tokens.size()));
  }
}

std::optional<int> Vocabulary::find(const NGram& tokens) const {
  const auto it = index_.find(tokens);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t default_min_df(std::size_t n_test) {
  const auto half_percent = (n_test * 5 + 999) / 1000;  // ceil(0.005 * n)
  return std::max<std::size_t>(2, half_percent);
}

Vocabulary build_vocabulary(const DatasetStore& store, const TokenizedCorpus& corpus,
                            std::size_t min_df, int n_max) {
  if (min_df < 1) throw std::invalid_argument("min_df must be >= 1");
  if (n_max < 1 || n_max > kMaxNGram) throw std::invalid_argument("n_max must be in [1, 3]");

  std::map<NGram, std::size_t> test_df;
  for (const auto& parts : corpus.test()) {
    for (auto& gram : document_ngrams(parts, n_max)) ++test_df[gram];
  }

  std::vector<TokenFeature> features;
  for (auto& [gram, df] : test_df) {
    if (df < min_df) continue;
    TokenFeature f;
    f.tokens = gram;
    f.id = static_cast<int>(features.size());
    f.doc_frequency_test = df;
    features.push_back(std::move(f));
  }
  if (features.empty()) throw std::invalid_argument("min_df too high");

  Vocabulary vocab(std::move(features));
  std::vector<TokenFeature> with_train = vocab.features();
  for (std::size_t i = 0; i < corpus.train().size(); ++i) {
    const auto& label = store.train()[i].label;
    for (const auto& gram : document_ngrams(corpus.train()[i], n_max)) {
      if (const auto id = vocab.find(gram)) {
        ++with_train[static_cast<std::size_t>(*id)].doc_frequency_train_by_label[label];
      }
    }
  }
  return Vocabulary(std::move(with_train));
}

Vocabulary build_vocabulary(const DatasetStore& store, std::size_t min_df, int n_max) {
  return build_vocabulary(store, TokenizedCorpus::build(store), min_df, n_max);
}

FeatureMatrix::FeatureMatrix(std::size_t n_cols, std::vector<std::vector<int>> rows)
    : rows_(std::move(rows)), cols_(n_cols) {
  for (std::size_t d = 0; d < rows_.size(); ++d) {
    auto& row = rows_[d];
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    for (int f : row) {
      if (f < 0 || static_cast<std::size_t>(f) >= n_cols) {
        throw std::out_of_range("feature id out of range");
      }
      cols_[static_cast<std::size_t>(f)].push_back(d);
    }
  }
}

bool FeatureMatrix::cell(std::size_t doc, int feature) const {
  const auto& row = rows_.at(doc);
  return std::binary_search(row.begin(), row.end(), feature);
}

FeatureMatrix build_feature_matrix(const DatasetStore& store, const TokenizedCorpus& corpus,
                                   const Vocabulary& vocab) {
  if (vocab.empty()) throw std::invalid_argument("vocabulary is empty");
  std::vector<std::vector<int>> rows(store.test().size());
  for (std::size_t d = 0; d < rows.size(); ++d) {
    for (const auto& gram : document_ngrams(corpus.test()[d], vocab.max_ngram())) {
      if (const auto id = vocab.find(gram)) rows[d].push_back(*id);
    }
  }
  return FeatureMatrix(vocab.size(), std::move(rows));
}

FeatureMatrix build_feature_matrix(const DatasetStore& store, const Vocabulary& vocab) {
  return build_feature_matrix(store, TokenizedCorpus::build(store), vocab);
}

std::string to_string(Bucket bucket) {
  switch (bucket) {
    case Bucket::kLow: return "low";
    case Bucket::kMedium: return "medium";
    case Bucket::kHigh: return "high";
  }
  return "medium";
}

std::optional<Bucket> parse_bucket(std::string_view text) {
  std::string lower(text);
  for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "low") return Bucket::kLow;
  if (lower == "medium") return Bucket::kMedium;
  if (lower == "high") return Bucket::kHigh;
  return std::nullopt;
}

double nearest_rank_percentile(std::span<const double> sorted, int percentile) {
  if (sorted.empty()) throw std::invalid_argument("percentile of empty data");
  if (percentile < 0 || percentile > 100) throw std::invalid_argument("percentile out of range");
  const std::size_t n = sorted.size();
  // ceil(p * n / 100) in integers.
  std::size_t rank = (static_cast<std::size_t>(percentile) * n + 99) / 100;
  rank = std::clamp<std::size_t>(rank, 1, n);
  return sorted[rank - 1];
}

Bucket bucket_of(double value, const Thresholds& thresholds) {
  if (value < thresholds.low) return Bucket::kLow;
  if (value > thresholds.high) return Bucket::kHigh;
  return Bucket::kMedium;
}

Bucketing bucketize(std::span<const double> values, int p_low, int p_high) {
  if (values.size() < kMinBucketValues) {
    throw std::invalid_argument("insufficient data for bucketing");
  }
  if (p_low > p_high) throw std::invalid_argument("p_low must not exceed p_high");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  Bucketing out;
  out.thresholds = {nearest_rank_percentile(sorted, p_low), nearest_rank_percentile(sorted, p_high)};
  out.buckets.reserve(values.size());
  for (double v : values) out.buckets.push_back(bucket_of(v, out.thresholds));
  return out;
}

double doc_length(const TokenizedCorpus::Parts& parts) {
  std::size_t n = 0;
  for (const auto& part : parts) n += part.size();
  return static_cast<double>(n);
}

double word_overlap(const TokenizedCorpus::Parts& parts) {
  if (parts.size() != 2) throw std::invalid_argument("overlap needs two text parts");
  const std::set<std::string> premise(parts[0].begin(), parts[0].end());
  const std::set<std::string> hypothesis(parts[1].begin(), parts[1].end());
  if (hypothesis.empty()) return 0.0;
  std::size_t shared = 0;
  for (const auto& t : hypothesis) shared += premise.contains(t) ? 1 : 0;
  return static_cast<double>(shared) / static_cast<double>(hypothesis.size());
}

std::vector<HighLevelFeature> compute_high_level_features(const DatasetStore& store,
                                                          const TokenizedCorpus& corpus) {
  const auto& test = store.test();
  std::vector<HighLevelFeature> out;

  auto add = [&](std::string name, std::vector<double> values) {
    auto bucketing = bucketize(values);
    out.push_back({std::move(name), std::move(values), bucketing.thresholds,
                   std::move(bucketing.buckets)});
  };

  std::vector<double> lengths;
  lengths.reserve(test.size());
  for (const auto& parts : corpus.test()) lengths.push_back(doc_length(parts));
  add(std::string(kDocLengthFeature), std::move(lengths));

  const bool paired = std::all_of(test.begin(), test.end(),
                                  [](const DocumentRecord& r) { return r.texts.size() == 2; });
  if (paired) {
    std::vector<double> overlaps;
    overlaps.reserve(test.size());
    for (const auto& parts : corpus.test()) overlaps.push_back(word_overlap(parts));
    add(std::string(kOverlapFeature), std::move(overlaps));
  }

  std::set<std::string> names;
  for (const auto& rec : test) {
    for (const auto& [name, value] : rec.features) names.insert(name);
  }
  for (const auto& name : names) {
    if (name == kDocLengthFeature || name == kOverlapFeature) {
      throw ValidationError("ingested feature '" + name + "' collides with a built-in feature");
    }
    std::vector<double> values;
    values.reserve(test.size());
    for (const auto& rec : test) {
      const auto it = rec.features.find(name);
      if (it == rec.features.end()) {
        throw ValidationError("feature '" + name + "' is missing for test record '" + rec.id + "'");
      }
      values.push_back(it->second);
    }
    add(name, std::move(values));
  }
  return out;
}

std::vector<HighLevelFeature> compute_high_level_features(const DatasetStore& store) {
  return compute_high_level_features(store, TokenizedCorpus::build(store));
}

std::optional<double> high_level_value(std::string_view name, const DocumentRecord& record,
                                       const TokenizedCorpus::Parts& parts) {
  if (name == kDocLengthFeature) return doc_length(parts);
  if (name == kOverlapFeature) {
    if (parts.size() != 2) return std::nullopt;
    return word_overlap(parts);
  }
  const auto it = record.features.find(std::string(name));
  if (it == record.features.end()) return std::nullopt;
  return it->second;
}

const HighLevelFeature* find_high_level(const std::vector<HighLevelFeature>& features,
                                        std::string_view name) {
  for (const auto& f : features) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

}  // namespace errscope
