#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace errscope {

// Raised for input that is not a well-formed record line.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Raised for records that parse but violate a corpus invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Split { kTrain, kTest };

struct Attribution {
  std::string token;
  int position = 0;  // index into the whitespace-split tokens of all parts
  double score = 0.0;

  bool operator==(const Attribution&) const = default;
};

struct DocumentRecord {
  std::string id;
  std::vector<std::string> texts;  // 1 part, or premise + hypothesis
  std::string label;
  std::optional<std::string> prediction;
  Split split = Split::kTest;
  std::map<std::string, std::vector<Attribution>> attributions;  // class -> entries
  std::vector<double> embedding;                                 // empty when absent
  std::map<std::string, double> features;
  std::optional<std::array<double, 2>> projection;

  bool is_error() const { return prediction && *prediction != label; }
  bool operator==(const DocumentRecord&) const = default;
};

inline constexpr std::size_t kDefaultAttributionsPerClass = 3;

// Keeps, per class, the k entries with the largest |score|; ties go to the
// smaller token position.
DocumentRecord truncate_attributions(DocumentRecord record,
                                     std::size_t k = kDefaultAttributionsPerClass);

// Number of whitespace-separated raw tokens across all text parts. Attribution
// positions index into this sequence.
std::size_t raw_token_count(const DocumentRecord& record);

// Immutable, validated corpus. Test records keep their input order; the index
// of a test record in test() is the document index used by every other module.
class DatasetStore {
 public:
  // Validates the records and derives error labels. Throws ValidationError.
  static DatasetStore build(std::vector<DocumentRecord> records,
                            std::size_t attributions_per_class = kDefaultAttributionsPerClass);

  const std::vector<DocumentRecord>& test() const { return test_; }
  const std::vector<DocumentRecord>& train() const { return train_; }
  const std::vector<std::string>& classes() const { return classes_; }
  const std::vector<std::uint8_t>& error_labels() const { return error_labels_; }
  std::size_t error_count() const { return error_count_; }
  double baseline_error_rate() const { return baseline_error_rate_; }
  std::size_t embedding_dim() const { return embedding_dim_; }
  bool has_embeddings() const { return embedding_dim_ > 0; }
  bool has_ingested_projection() const { return has_projection_; }
  bool has_class(const std::string& name) const;
  std::optional<std::size_t> find_test(const std::string& id) const;

  // FNV-1a over the canonical serialization of every record.
  std::uint64_t content_hash() const { return content_hash_; }
  // Deterministic one-line description; identical for identical inputs.
  std::string summary() const;

 private:
  DatasetStore() = default;

  std::vector<DocumentRecord> test_;
  std::vector<DocumentRecord> train_;
  std::vector<std::string> classes_;
  std::vector<std::uint8_t> error_labels_;
  std::size_t error_count_ = 0;
  double baseline_error_rate_ = 0.0;
  std::size_t embedding_dim_ = 0;
  bool has_projection_ = false;
  std::uint64_t content_hash_ = 0;
  std::map<std::string, std::size_t> test_index_;
};

// One bit per test record: prediction != label.
std::vector<std::uint8_t> compute_error_labels(const DatasetStore& store);

DocumentRecord parse_record(const std::string& line, std::size_t line_number);
std::string serialize_record(const DocumentRecord& record);

DatasetStore load_dataset(std::istream& in);
DatasetStore load_dataset(const std::filesystem::path& path);

std::string to_string(Split split);

}  // namespace errscope
