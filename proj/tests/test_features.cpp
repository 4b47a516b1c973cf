#include <algorithm>
#include <map>
#include <set>

#include "doctest.h"
#include "errscope/features.hpp"
#include "support/corpus.hpp"

using namespace errscope;
using namespace errscope::testing;

namespace {

// Does `text`'s token sequence contain `gram` contiguously? Independent of the
// library's n-gram sets.
bool scan_contains(const std::string& text, const NGram& gram) {
  const auto toks = tokenize(text);
  for (std::size_t i = 0; i + gram.size() <= toks.size(); ++i) {
    if (std::equal(gram.begin(), gram.end(), toks.begin() + static_cast<std::ptrdiff_t>(i))) return true;
  }
  return false;
}

bool doc_contains(const DocumentRecord& rec, const NGram& gram) {
  return std::any_of(rec.texts.begin(), rec.texts.end(),
                     [&](const std::string& t) { return scan_contains(t, gram); });
}

double oracle_rank(std::vector<double> v, int p) {
  std::sort(v.begin(), v.end());
  std::size_t rank = 0;
  while (rank * 100 < static_cast<std::size_t>(p) * v.size()) ++rank;  // smallest rank with rank/n >= p/100
  rank = std::clamp<std::size_t>(rank, 1, v.size());
  return v[rank - 1];
}

}  // namespace

TEST_SUITE("features") {

TEST_CASE("default min_df") {
  CHECK(default_min_df(10) == 2);
  CHECK(default_min_df(400) == 2);
  CHECK(default_min_df(401) == 3);
  CHECK(default_min_df(2000) == 10);
}

TEST_CASE("vocabulary doc frequencies match a brute-force recount") {
  RandomCorpusSpec spec;
  spec.n_test = 50;
  spec.n_train = 30;
  spec.vocab = 6;
  spec.two_parts = true;
  spec.seed = 11;
  const auto store = DatasetStore::build(random_corpus(spec));
  const auto vocab = build_vocabulary(store, 3);
  REQUIRE_FALSE(vocab.empty());

  // every n-gram of every test doc, with its recount
  std::set<NGram> all;
  for (const auto& rec : store.test()) {
    for (const auto& t : rec.texts) {
      const auto g = extract_ngrams(t);
      all.insert(g.begin(), g.end());
    }
  }
  std::size_t expected_size = 0;
  for (const auto& gram : all) {
    std::size_t df = 0;
    for (const auto& rec : store.test()) df += doc_contains(rec, gram) ? 1 : 0;
    const auto id = vocab.find(gram);
    if (df < 3) {
      CHECK_FALSE(id);
      continue;
    }
    ++expected_size;
    REQUIRE(id);
    const auto& f = vocab.at(*id);
    CHECK(f.doc_frequency_test == df);
    std::map<std::string, std::size_t> by_label;
    for (const auto& rec : store.train()) {
      if (doc_contains(rec, gram)) ++by_label[rec.label];
    }
    for (const auto& [label, count] : by_label) CHECK(f.doc_frequency_train_by_label.at(label) == count);
  }
  CHECK(vocab.size() == expected_size);
  // ids follow lexicographic token-tuple order
  for (std::size_t i = 1; i < vocab.size(); ++i) {
    CHECK(vocab.at(static_cast<int>(i - 1)).tokens < vocab.at(static_cast<int>(i)).tokens);
    CHECK(vocab.at(static_cast<int>(i)).id == static_cast<int>(i));
  }
}

TEST_CASE("feature matrix equals a brute-force scan") {
  RandomCorpusSpec spec;
  spec.n_test = 50;
  spec.vocab = 5;
  spec.seed = 3;
  const auto store = DatasetStore::build(random_corpus(spec));
  const auto vocab = build_vocabulary(store, 2);
  const auto matrix = build_feature_matrix(store, vocab);
  CHECK(matrix.rows() == 50);
  CHECK(matrix.cols() == vocab.size());
  for (std::size_t d = 0; d < store.test().size(); ++d) {
    for (const auto& f : vocab.features()) {
      CHECK(matrix.cell(d, f.id) == doc_contains(store.test()[d], f.tokens));
    }
  }
  for (const auto& f : vocab.features()) CHECK(matrix.column(f.id).size() == f.doc_frequency_test);
}

TEST_CASE("min_df above every frequency fails") {
  const auto store = DatasetStore::build({make_doc("a", {"x"}, "p", "p"), make_doc("b", {"y"}, "p", "p")});
  CHECK_THROWS_WITH_AS(build_vocabulary(store, 3), "min_df too high", std::invalid_argument);
}

TEST_CASE("bucketing of 1..100") {
  std::vector<double> v;
  for (int i = 1; i <= 100; ++i) v.push_back(i);
  const auto b = bucketize(v);
  CHECK(b.thresholds.low == 10.0);
  CHECK(b.thresholds.high == 90.0);
  CHECK(std::count(b.buckets.begin(), b.buckets.end(), Bucket::kLow) == 9);
  CHECK(std::count(b.buckets.begin(), b.buckets.end(), Bucket::kHigh) == 10);
  CHECK(std::count(b.buckets.begin(), b.buckets.end(), Bucket::kMedium) == 81);
}

TEST_CASE("bucketing matches the nearest-rank oracle on random sets") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = 10 + uniform_index(rng, 60);
    std::vector<double> v(n);
    for (auto& x : v) x = static_cast<double>(uniform_index(rng, 20));
    const auto b = bucketize(v);
    REQUIRE(b.thresholds.low == oracle_rank(v, 10));
    REQUIRE(b.thresholds.high == oracle_rank(v, 90));
    for (std::size_t i = 0; i < n; ++i) {
      const auto expect = v[i] < b.thresholds.low ? Bucket::kLow
                          : v[i] > b.thresholds.high ? Bucket::kHigh
                                                     : Bucket::kMedium;
      REQUIRE(b.buckets[i] == expect);
    }
  }
}

TEST_CASE("bucketing needs ten values") {
  std::vector<double> v(9, 1.0);
  CHECK_THROWS_WITH_AS(bucketize(v), "insufficient data for bucketing", std::invalid_argument);
  v.push_back(1.0);
  const auto b = bucketize(v);
  CHECK(std::all_of(b.buckets.begin(), b.buckets.end(), [](Bucket x) { return x == Bucket::kMedium; }));
}

TEST_CASE("bucket names") {
  CHECK(to_string(Bucket::kLow) == "low");
  CHECK(parse_bucket("HIGH") == Bucket::kHigh);
  CHECK_FALSE(parse_bucket("mid"));
}

TEST_CASE("word overlap and doc length") {
  CHECK(word_overlap({{"a", "b", "c"}, {"b", "c"}}) == 1.0);
  CHECK(word_overlap({{"a"}, {"b", "c"}}) == 0.0);
  CHECK(word_overlap({{"a", "b"}, {"b", "c", "c"}}) == 0.5);
  CHECK(word_overlap({{"a"}, {}}) == 0.0);
  CHECK(doc_length({{"a", "b"}, {"c"}}) == 3.0);
}

TEST_CASE("high-level features over a store") {
  std::vector<DocumentRecord> recs;
  for (int i = 0; i < 20; ++i) {
    auto rec = make_doc(doc_id(i), {"p q r", i < 10 ? "p" : "z"}, "x", "x");
    rec.features["zeta"] = i;
    rec.features["alpha"] = 20 - i;
    recs.push_back(rec);
  }
  const auto store = DatasetStore::build(recs);
  const auto hl = compute_high_level_features(store);
  REQUIRE(hl.size() == 4);
  CHECK(hl[0].name == "doc_length");
  CHECK(hl[1].name == "overlap");
  CHECK(hl[2].name == "alpha");
  CHECK(hl[3].name == "zeta");
  CHECK(hl[1].values[0] == 1.0);
  CHECK(hl[1].values[19] == 0.0);
  CHECK(find_high_level(hl, "zeta") == &hl[3]);
  CHECK(find_high_level(hl, "nope") == nullptr);

  auto missing = recs;
  missing[3].features.erase("zeta");
  CHECK_THROWS_AS(compute_high_level_features(DatasetStore::build(missing)), ValidationError);
  auto clash = recs;
  for (auto& r : clash) r.features["overlap"] = 1.0;
  CHECK_THROWS_AS(compute_high_level_features(DatasetStore::build(clash)), ValidationError);
}

TEST_CASE("overlap is skipped for single-part corpora") {
  std::vector<DocumentRecord> recs;
  for (int i = 0; i < 12; ++i) recs.push_back(make_doc(doc_id(i), {"a b"}, "x", "x"));
  const auto hl = compute_high_level_features(DatasetStore::build(recs));
  REQUIRE(hl.size() == 1);
  CHECK(hl[0].name == "doc_length");
}

}
