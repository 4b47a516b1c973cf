#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace errscope {

// A contiguous run of 1..3 normalized tokens.
using NGram = std::vector<std::string>;

inline constexpr int kMaxNGram = 3;

struct TokenSpan {
  std::string token;  // normalized form
  std::size_t begin = 0;  // byte offsets of the stripped token in the input
  std::size_t end = 0;
};

// Splits on Unicode whitespace (UTF-8). Pieces are never empty.
std::vector<std::string_view> split_whitespace(std::string_view text);

// Strips leading/trailing punctuation and lowercases ASCII letters. May return
// an empty string for punctuation-only input.
std::string normalize_token(std::string_view raw);

// Normalized tokens with their byte spans; tokens that normalize to empty are
// dropped.
std::vector<TokenSpan> tokenize_with_spans(std::string_view text);
std::vector<std::string> tokenize(std::string_view text);

// All contiguous 1..n_max-grams of the normalized token sequence.
std::set<NGram> extract_ngrams(std::string_view text, int n_max = kMaxNGram);

// Same, over an already tokenized sequence.
void append_ngrams(const std::vector<std::string>& tokens, int n_max, std::set<NGram>& out);

std::string join_ngram(const NGram& ngram);

// Tokenizes a user phrase into an n-gram. Throws std::invalid_argument when the
// phrase has no tokens or more than kMaxNGram.
NGram parse_ngram(std::string_view phrase);

// True when `ngram` occurs contiguously in `tokens`.
bool contains_ngram(const std::vector<std::string>& tokens, const NGram& ngram);

}  // namespace errscope
