#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace errscope {

// Fixed-size set of test document indices.
class DocBitset {
 public:
  DocBitset() = default;
  explicit DocBitset(std::size_t size) : size_(size), words_((size + 63) / 64, 0) {}

  static DocBitset from_indices(std::size_t size, std::span<const std::size_t> indices) {
    DocBitset set(size);
    for (auto i : indices) set.set(i);
    return set;
  }

  static DocBitset full(std::size_t size) {
    DocBitset set(size);
    for (std::size_t i = 0; i < size; ++i) set.set(i);
    return set;
  }

  std::size_t size() const { return size_; }
  void set(std::size_t i) { words_[i / 64] |= std::uint64_t{1} << (i % 64); }
  bool test(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1U; }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }

  std::size_t intersect_count(const DocBitset& other) const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < words_.size(); ++i) {
      n += static_cast<std::size_t>(std::popcount(words_[i] & other.words_[i]));
    }
    return n;
  }

  std::size_t intersect_count(const DocBitset& a, const DocBitset& b) const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < words_.size(); ++i) {
      n += static_cast<std::size_t>(std::popcount(words_[i] & a.words_[i] & b.words_[i]));
    }
    return n;
  }

  DocBitset& operator&=(const DocBitset& other) {
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= other.words_[i];
    return *this;
  }

  DocBitset& operator|=(const DocBitset& other) {
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= other.words_[i];
    return *this;
  }

  friend DocBitset operator&(DocBitset a, const DocBitset& b) { return a &= b; }

  std::vector<std::size_t> indices() const {
    std::vector<std::size_t> out;
    for (std::size_t w = 0; w < words_.size(); ++w) {
      auto bits = words_[w];
      while (bits) {
        out.push_back(w * 64 + static_cast<std::size_t>(std::countr_zero(bits)));
        bits &= bits - 1;
      }
    }
    return out;
  }

  bool operator==(const DocBitset&) const = default;

 private:
  std::size_t size_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace errscope
