#include "errscope/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "errscope/hash.hpp"
#include "errscope/text.hpp"
#include "json.hpp"

namespace errscope {

using nlohmann::json;

namespace {

const std::set<std::string> kKnownFields = {"id",          "texts",     "label",
                                            "prediction",  "split",     "attributions",
                                            "embedding",   "features",  "projection"};

double finite_number(const json& value, std::size_t line, const std::string& field) {
  if (!value.is_number()) throw ParseError(line, "'" + field + "' must be a number");
  const double v = value.get<double>();
  if (!std::isfinite(v)) throw ParseError(line, "'" + field + "' must be finite");
  return v;
}

const std::string& required_string(const json& obj, const char* key, std::size_t line) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw ParseError(line, std::string("field '") + key + "' must be a string");
  }
  return it->get_ref<const std::string&>();
}

}  // namespace

std::string to_string(Split split) { return split == Split::kTrain ? "train" : "test"; }

DocumentRecord truncate_attributions(DocumentRecord record, std::size_t k) {
  if (k == 0) throw std::invalid_argument("k must be positive");
  for (auto& [cls, entries] : record.attributions) {
    std::stable_sort(entries.begin(), entries.end(), [](const Attribution& a, const Attribution& b) {
      const double ma = std::fabs(a.score), mb = std::fabs(b.score);
      if (ma != mb) return ma > mb;
      return a.position < b.position;
    });
    if (entries.size() > k) entries.resize(k);
  }
  return record;
}

std::size_t raw_token_count(const DocumentRecord& record) {
  std::size_t n = 0;
  for (const auto& part : record.texts) n += split_whitespace(part).size();
  return n;
}

DocumentRecord parse_record(const std::string& line, std::size_t line_number) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(line_number, std::string("malformed JSON: ") + e.what());
  }
  if (!obj.is_object()) throw ParseError(line_number, "record must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (!kKnownFields.contains(key)) throw ParseError(line_number, "unknown field '" + key + "'");
  }

  DocumentRecord rec;
  rec.id = required_string(obj, "id", line_number);
  if (rec.id.empty()) throw ParseError(line_number, "'id' must be non-empty");

  const auto texts = obj.find("texts");
  if (texts == obj.end() || !texts->is_array() || texts->empty() || texts->size() > 2) {
    throw ParseError(line_number, "'texts' must be an array of 1 or 2 strings");
  }
  for (const auto& t : *texts) {
    if (!t.is_string()) throw ParseError(line_number, "'texts' entries must be strings");
    rec.texts.push_back(t.get<std::string>());
  }

  rec.label = required_string(obj, "label", line_number);
  if (const auto p = obj.find("prediction"); p != obj.end() && !p->is_null()) {
    if (!p->is_string()) throw ParseError(line_number, "'prediction' must be a string");
    rec.prediction = p->get<std::string>();
  }

  const auto& split = required_string(obj, "split", line_number);
  if (split == "train") {
    rec.split = Split::kTrain;
  } else if (split == "test") {
    rec.split = Split::kTest;
  } else {
    throw ParseError(line_number, "'split' must be \"train\" or \"test\"");
  }

  if (const auto a = obj.find("attributions"); a != obj.end()) {
    if (!a->is_object()) throw ParseError(line_number, "'attributions' must be an object");
    for (const auto& [cls, entries] : a->items()) {
      if (!entries.is_array()) {
        throw ParseError(line_number, "attributions for '" + cls + "' must be an array");
      }
      auto& out = rec.attributions[cls];
      for (const auto& e : entries) {
        if (!e.is_object() || !e.contains("token") || !e["token"].is_string() ||
            !e.contains("pos") || !e["pos"].is_number_integer() || !e.contains("score")) {
          throw ParseError(line_number,
                           "attribution entries need {\"token\": string, \"pos\": int, \"score\": number}");
        }
        out.push_back({e["token"].get<std::string>(), e["pos"].get<int>(),
                       finite_number(e["score"], line_number, "score")});
      }
    }
  } else if (rec.split == Split::kTest) {
    throw ParseError(line_number, "test records require 'attributions'");
  }

  if (const auto e = obj.find("embedding"); e != obj.end() && !e->is_null()) {
    if (!e->is_array() || e->empty()) {
      throw ParseError(line_number, "'embedding' must be a non-empty array of numbers");
    }
    for (const auto& v : *e) rec.embedding.push_back(finite_number(v, line_number, "embedding"));
  }

  if (const auto f = obj.find("features"); f != obj.end() && !f->is_null()) {
    if (!f->is_object()) throw ParseError(line_number, "'features' must be an object");
    for (const auto& [name, v] : f->items()) {
      rec.features[name] = finite_number(v, line_number, "features." + name);
    }
  }

  if (const auto p = obj.find("projection"); p != obj.end() && !p->is_null()) {
    if (!p->is_array() || p->size() != 2) {
      throw ParseError(line_number, "'projection' must be [x, y]");
    }
    rec.projection = std::array<double, 2>{finite_number((*p)[0], line_number, "projection"),
                                           finite_number((*p)[1], line_number, "projection")};
  }
  return rec;
}

std::string serialize_record(const DocumentRecord& rec) {
  json obj;
  obj["id"] = rec.id;
  obj["texts"] = rec.texts;
  obj["label"] = rec.label;
  if (rec.prediction) obj["prediction"] = *rec.prediction;
  obj["split"] = to_string(rec.split);
  json attributions = json::object();
  for (const auto& [cls, entries] : rec.attributions) {
    json arr = json::array();
    for (const auto& e : entries) {
      arr.push_back({{"token", e.token}, {"pos", e.position}, {"score", e.score}});
    }
    attributions[cls] = std::move(arr);
  }
  obj["attributions"] = std::move(attributions);
  if (!rec.embedding.empty()) obj["embedding"] = rec.embedding;
  if (!rec.features.empty()) obj["features"] = rec.features;
  if (rec.projection) obj["projection"] = {(*rec.projection)[0], (*rec.projection)[1]};
  return obj.dump();
}

DatasetStore DatasetStore::build(std::vector<DocumentRecord> records,
                                 std::size_t attributions_per_class) {
  DatasetStore store;
  std::set<std::string> ids;
  std::set<std::string> classes;
  std::uint64_t hash = kFnvOffset;

  for (const auto& rec : records) {
    if (!ids.insert(rec.id).second) throw ValidationError("duplicate id '" + rec.id + "'");
    if (rec.texts.empty() || rec.texts.size() > 2) {
      throw ValidationError("record '" + rec.id + "' must have 1 or 2 text parts");
    }
    if (rec.label.empty()) throw ValidationError("record '" + rec.id + "' has an empty label");
    classes.insert(rec.label);
    if (rec.prediction) {
      if (rec.prediction->empty()) {
        throw ValidationError("record '" + rec.id + "' has an empty prediction");
      }
      classes.insert(*rec.prediction);
    } else if (rec.split == Split::kTest) {
      throw ValidationError("test record '" + rec.id + "' has no prediction");
    }
  }

  std::optional<std::size_t> dim;
  std::size_t with_embedding = 0, with_projection = 0, n_test = 0;
  for (auto& rec : records) {
    const auto n_tokens = raw_token_count(rec);
    for (const auto& [cls, entries] : rec.attributions) {
      if (!classes.contains(cls)) {
        throw ValidationError("record '" + rec.id + "' has attributions for unknown class '" +
                              cls + "'");
      }
      for (const auto& e : entries) {
        if (e.position < 0 || static_cast<std::size_t>(e.position) >= n_tokens) {
          throw ValidationError("record '" + rec.id + "' attribution position " +
                                std::to_string(e.position) + " is out of range");
        }
      }
    }
    if (!rec.embedding.empty()) {
      if (dim && *dim != rec.embedding.size()) {
        throw ValidationError("mixed embedding dimensions (" + std::to_string(*dim) + " vs " +
                              std::to_string(rec.embedding.size()) + " in '" + rec.id + "')");
      }
      dim = rec.embedding.size();
    }
    for (const auto& [name, value] : rec.features) {
      if (name.empty() || name.find_first_of(",=\t\n") != std::string::npos) {
        throw ValidationError("feature name '" + name + "' must be non-empty without ',', '='");
      }
    }
    if (rec.split == Split::kTest) {
      ++n_test;
      with_embedding += rec.embedding.empty() ? 0 : 1;
      with_projection += rec.projection ? 1 : 0;
    }
    rec = truncate_attributions(std::move(rec), attributions_per_class);
    hash = fnv1a(serialize_record(rec), hash);
    hash = fnv1a("\n", hash);
  }

  if (n_test == 0) throw ValidationError("no test records");
  if (with_embedding != 0 && with_embedding != n_test) {
    throw ValidationError("either all test records have embeddings or none do");
  }
  if (with_projection != 0 && with_projection != n_test) {
    throw ValidationError("either all test records have projections or none do");
  }

  store.classes_.assign(classes.begin(), classes.end());
  store.embedding_dim_ = with_embedding ? *dim : 0;
  store.has_projection_ = with_projection != 0;
  store.content_hash_ = hash;
  for (auto& rec : records) {
    if (rec.split == Split::kTest) {
      store.test_index_.emplace(rec.id, store.test_.size());
      store.test_.push_back(std::move(rec));
    } else {
      store.train_.push_back(std::move(rec));
    }
  }
  store.error_labels_ = compute_error_labels(store);
  for (auto bit : store.error_labels_) store.error_count_ += bit;
  store.baseline_error_rate_ =
      static_cast<double>(store.error_count_) / static_cast<double>(store.test_.size());
  return store;
}

bool DatasetStore::has_class(const std::string& name) const {
  return std::binary_search(classes_.begin(), classes_.end(), name);
}

std::optional<std::size_t> DatasetStore::find_test(const std::string& id) const {
  const auto it = test_index_.find(id);
  if (it == test_index_.end()) return std::nullopt;
  return it->second;
}

std::string DatasetStore::summary() const {
  std::ostringstream out;
  out << "test=" << test_.size() << " train=" << train_.size() << " classes=";
  for (std::size_t i = 0; i < classes_.size(); ++i) out << (i ? "," : "") << classes_[i];
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(content_hash_));
  out << " errors=" << error_count_ << " embedding_dim=" << embedding_dim_ << " hash=" << hex;
  return out.str();
}

std::vector<std::uint8_t> compute_error_labels(const DatasetStore& store) {
  std::vector<std::uint8_t> bits;
  bits.reserve(store.test().size());
  for (const auto& rec : store.test()) bits.push_back(rec.is_error() ? 1 : 0);
  return bits;
}

DatasetStore load_dataset(std::istream& in) {
  std::vector<DocumentRecord> records;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    records.push_back(parse_record(line, line_number));
  }
  return DatasetStore::build(std::move(records));
}

DatasetStore load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return load_dataset(in);
}

}  // namespace errscope
