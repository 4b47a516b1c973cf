#include "errscope/text.hpp"

#include <algorithm>
#include <cstdint>
#include <stdexcept>

namespace errscope {

namespace {

struct DecodedChar {
  char32_t code = 0;
  std::size_t length = 1;
};

// Lenient UTF-8 decoder: malformed bytes decode as themselves, length 1.
DecodedChar decode_at(std::string_view s, std::size_t i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) -> int {
    if (i + k >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[i + k]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) return {b0, 1};
  if ((b0 & 0xE0) == 0xC0) {
    const int c1 = cont(1);
    if (c1 >= 0) return {static_cast<char32_t>(((b0 & 0x1F) << 6) | c1), 2};
  } else if ((b0 & 0xF0) == 0xE0) {
    const int c1 = cont(1), c2 = cont(2);
    if (c1 >= 0 && c2 >= 0)
      return {static_cast<char32_t>(((b0 & 0x0F) << 12) | (c1 << 6) | c2), 3};
  } else if ((b0 & 0xF8) == 0xF0) {
    const int c1 = cont(1), c2 = cont(2), c3 = cont(3);
    if (c1 >= 0 && c2 >= 0 && c3 >= 0)
      return {static_cast<char32_t>(((b0 & 0x07) << 18) | (c1 << 12) | (c2 << 6) | c3), 4};
  }
  return {b0, 1};
}

bool is_unicode_space(char32_t c) {
  switch (c) {
    case U'\t': case U'\n': case U'\v': case U'\f': case U'\r': case U' ':
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

bool is_punctuation(char32_t c) {
  if (c < 0x80) {
    return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) ||
           (c >= 0x5B && c <= 0x60) || (c >= 0x7B && c <= 0x7E);
  }
  switch (c) {
    case 0xA1: case 0xAB: case 0xB7: case 0xBB: case 0xBF:
      return true;
    default:
      // General punctuation block: dashes, quotes, ellipsis, primes.
      return (c >= 0x2010 && c <= 0x2027) || (c >= 0x2030 && c <= 0x205E) ||
             (c >= 0x3001 && c <= 0x3003);
  }
}

// Byte range of `raw` left after stripping punctuation at both ends.
std::pair<std::size_t, std::size_t> strip_range(std::string_view raw) {
  std::size_t begin = 0;
  while (begin < raw.size()) {
    const auto d = decode_at(raw, begin);
    if (!is_punctuation(d.code)) break;
    begin += d.length;
  }
  // Walk forward to find the end of the last non-punctuation character.
  std::size_t end = begin;
  for (std::size_t i = begin; i < raw.size();) {
    const auto d = decode_at(raw, i);
    i += d.length;
    if (!is_punctuation(d.code)) end = i;
  }
  return {begin, end};
}

std::string lowercase_ascii(std::string_view s) {
  std::string out(s);
  for (auto& ch : out) {
    if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
  }
  return out;
}

}  // namespace

std::vector<std::string_view> split_whitespace(std::string_view text) {
  std::vector<std::string_view> pieces;
  std::size_t start = std::string_view::npos;
  for (std::size_t i = 0; i < text.size();) {
    const auto d = decode_at(text, i);
    if (is_unicode_space(d.code)) {
      if (start != std::string_view::npos) {
        pieces.push_back(text.substr(start, i - start));
        start = std::string_view::npos;
      }
    } else if (start == std::string_view::npos) {
      start = i;
    }
    i += d.length;
  }
  if (start != std::string_view::npos) pieces.push_back(text.substr(start));
  return pieces;
}

std::string normalize_token(std::string_view raw) {
  const auto [begin, end] = strip_range(raw);
  return lowercase_ascii(raw.substr(begin, end - begin));
}

std::vector<TokenSpan> tokenize_with_spans(std::string_view text) {
  std::vector<TokenSpan> out;
  for (const auto piece : split_whitespace(text)) {
    const auto [begin, end] = strip_range(piece);
    if (begin == end) continue;
    const auto offset = static_cast<std::size_t>(piece.data() - text.data());
    out.push_back({lowercase_ascii(piece.substr(begin, end - begin)), offset + begin,
                   offset + end});
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  for (auto& span : tokenize_with_spans(text)) out.push_back(std::move(span.token));
  return out;
}

void append_ngrams(const std::vector<std::string>& tokens, int n_max, std::set<NGram>& out) {
  const auto n = tokens.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t len = 1; len <= static_cast<std::size_t>(n_max) && i + len <= n; ++len) {
      out.emplace(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                  tokens.begin() + static_cast<std::ptrdiff_t>(i + len));
    }
  }
}

std::set<NGram> extract_ngrams(std::string_view text, int n_max) {
  if (n_max < 1 || n_max > kMaxNGram) {
    throw std::invalid_argument("n_max must be in [1, 3]");
  }
  std::set<NGram> out;
  append_ngrams(tokenize(text), n_max, out);
  return out;
}

std::string join_ngram(const NGram& ngram) {
  std::string out;
  for (const auto& token : ngram) {
    if (!out.empty()) out += ' ';
    out += token;
  }
  return out;
}

NGram parse_ngram(std::string_view phrase) {
  auto tokens = tokenize(phrase);
  if (tokens.empty()) {
    throw std::invalid_argument("phrase '" + std::string(phrase) + "' has no tokens");
  }
  if (tokens.size() > static_cast<std::size_t>(kMaxNGram)) {
    throw std::invalid_argument("phrase '" + std::string(phrase) + "' exceeds 3 tokens");
  }
  return tokens;
}

bool contains_ngram(const std::vector<std::string>& tokens, const NGram& ngram) {
  if (ngram.empty() || ngram.size() > tokens.size()) return false;
  return std::search(tokens.begin(), tokens.end(), ngram.begin(), ngram.end()) !=
         tokens.end();
}

}  // namespace errscope
