#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "errscope/ingest.hpp"
#include "errscope/random.hpp"
#include "errscope/text.hpp"

namespace errscope::testing {

inline DocumentRecord make_doc(std::string id, std::vector<std::string> texts, std::string label,
                               std::string prediction, Split split = Split::kTest) {
  DocumentRecord rec;
  rec.id = std::move(id);
  rec.texts = std::move(texts);
  rec.label = std::move(label);
  rec.prediction = std::move(prediction);
  rec.split = split;
  return rec;
}

inline std::string doc_id(std::size_t i) {
  std::string s = std::to_string(i);
  return "d" + std::string(6 - std::min<std::size_t>(6, s.size()), '0') + s;
}

// Random attribution entries for every class over the record's raw tokens.
inline void add_random_attributions(DocumentRecord& rec, const std::vector<std::string>& classes,
                                    Rng& rng, std::size_t per_class = 5) {
  std::vector<std::string> raw;
  for (const auto& text : rec.texts) {
    for (const auto& tok : split_whitespace(text)) raw.emplace_back(tok);
  }
  for (const auto& cls : classes) {
    auto& entries = rec.attributions[cls];
    for (std::size_t k = 0; k < per_class && !raw.empty(); ++k) {
      const auto pos = uniform_index(rng, raw.size());
      const double score = std::round((uniform_unit(rng) * 2.0 - 1.0) * 1000.0) / 1000.0;
      entries.push_back({raw[pos], static_cast<int>(pos), score});
    }
  }
}

struct RandomCorpusSpec {
  std::size_t n_test = 200;
  std::size_t n_train = 0;
  std::size_t vocab = 8;
  std::size_t min_len = 2;
  std::size_t max_len = 8;
  double base_error = 0.25;
  // Words w0 and w1 raise the error probability by these amounts.
  double w0_lift = 0.3;
  double w1_lift = 0.0;
  bool two_parts = false;
  std::size_t embedding_dim = 0;
  std::uint64_t seed = 1;
};

inline std::string word(std::size_t i) { return "w" + std::to_string(i); }

inline std::vector<DocumentRecord> random_corpus(const RandomCorpusSpec& spec) {
  Rng rng(spec.seed);
  const std::vector<std::string> classes = {"neg", "pos"};
  std::vector<DocumentRecord> out;
  auto make_text = [&](bool& has_w0, bool& has_w1) {
    const auto len = spec.min_len + uniform_index(rng, spec.max_len - spec.min_len + 1);
    std::string text;
    for (std::size_t k = 0; k < len; ++k) {
      const auto w = uniform_index(rng, spec.vocab);
      has_w0 = has_w0 || w == 0;
      has_w1 = has_w1 || w == 1;
      if (!text.empty()) text += ' ';
      text += word(w);
    }
    return text;
  };
  for (std::size_t i = 0; i < spec.n_test + spec.n_train; ++i) {
    const bool train = i >= spec.n_test;
    bool has_w0 = false, has_w1 = false;
    std::vector<std::string> texts{make_text(has_w0, has_w1)};
    if (spec.two_parts) texts.push_back(make_text(has_w0, has_w1));
    const auto label = classes[uniform_index(rng, 2)];
    double p_err = spec.base_error + (has_w0 ? spec.w0_lift : 0.0) + (has_w1 ? spec.w1_lift : 0.0);
    const bool error = uniform_unit(rng) < std::min(p_err, 1.0);
    const auto prediction = error ? (label == "pos" ? "neg" : "pos") : label;
    auto rec = make_doc(doc_id(i), std::move(texts), label, prediction, train ? Split::kTrain : Split::kTest);
    if (!train) add_random_attributions(rec, classes, rng);
    for (std::size_t k = 0; k < spec.embedding_dim; ++k) {
      rec.embedding.push_back(uniform_unit(rng) + (error ? 0.5 : 0.0));
    }
    out.push_back(std::move(rec));
  }
  return out;
}

// Each test doc has eight tokens, the first is either the
// planted token or a neutral marker. Exactly `planted_docs` docs carry the
// planted token and `planted_errors` of them are mispredicted; the other
// `total_errors - planted_errors` errors are spread over the remaining docs.
struct PlantedSpec {
  std::size_t n_test = 2000;
  std::size_t planted_docs = 200;
  std::size_t planted_errors = 120;
  std::size_t total_errors = 500;
  std::string planted = "island";
  std::size_t fillers = 20;
  std::uint64_t seed = 7;
};

inline std::vector<DocumentRecord> planted_corpus(const PlantedSpec& spec) {
  Rng rng(spec.seed);
  std::vector<std::size_t> order(spec.n_test);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Fisher-Yates on the portable index source.
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
  std::vector<bool> planted(spec.n_test, false), error(spec.n_test, false);
  for (std::size_t k = 0; k < spec.planted_docs; ++k) {
    planted[order[k]] = true;
    error[order[k]] = k < spec.planted_errors;
  }
  for (std::size_t k = spec.planted_docs; k < spec.planted_docs + spec.total_errors - spec.planted_errors; ++k) {
    error[order[k]] = true;
  }
  const std::vector<std::string> classes = {"entailment", "neutral", "contradiction"};
  std::vector<DocumentRecord> out;
  for (std::size_t d = 0; d < spec.n_test; ++d) {
    std::string text = planted[d] ? spec.planted : "plain";
    for (int k = 0; k < 7; ++k) text += " f" + std::to_string(uniform_index(rng, spec.fillers));
    const auto label = classes[uniform_index(rng, classes.size())];
    auto prediction = label;
    if (error[d]) prediction = classes[(std::find(classes.begin(), classes.end(), label) - classes.begin() + 1) % 3];
    auto rec = make_doc(doc_id(d), {text}, label, prediction);
    add_random_attributions(rec, classes, rng, 4);
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace errscope::testing
