#pragma once

// Training vocabulary: frequency filtering, frequent-token subsampling and
// the smoothed-unigram negative-sampling table.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "conceptvec/rng.hpp"

namespace conceptvec {

struct VocabEntry {
  std::string token;
  int64_t count = 0;
  bool is_concept = false;
};

struct TransparentStringHash {
  using is_transparent = void;
  size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
};

class Vocabulary {
 public:
  // Entries sorted by descending count, then ascending token. Throws if no
  // token reaches min_count.
  static Vocabulary build(const std::unordered_map<std::string, int64_t>& counts,
                          int64_t min_count);
  static Vocabulary build_from_stream(std::istream& corpus, int64_t min_count);
  static Vocabulary build_from_tokens(const std::vector<std::string>& tokens,
                                      int64_t min_count);

  size_t size() const { return entries_.size(); }
  int64_t total_tokens() const { return total_tokens_; }
  const VocabEntry& entry(size_t i) const { return entries_[i]; }
  const std::vector<VocabEntry>& entries() const { return entries_; }

  std::optional<uint32_t> find(std::string_view token) const;

  // UTF-8, header line "#total <N>", then one "token<TAB>count" per line in
  // canonical order.
  void save(std::ostream& out) const;
  static Vocabulary load(std::istream& in);

 private:
  std::vector<VocabEntry> entries_;
  std::unordered_map<std::string, uint32_t, TransparentStringHash, std::equal_to<>> index_;
  int64_t total_tokens_ = 0;

  void finish();  // rebuilds index_ and total_tokens_
};

// min(1, sqrt(threshold / f)) with f = count/total. Applied independently
// per occurrence during training; concept tokens get the same rule.
double keep_probability(uint32_t token_index, const Vocabulary& vocab, double threshold);
double keep_probability(std::string_view token, const Vocabulary& vocab, double threshold);

// Draw table realizing the count^0.75 unigram distribution.
struct NegativeTable {
  std::vector<uint32_t> table;
  uint32_t draw(Rng& rng) const {
    return table[rng.uniform_u64(table.size())];
  }
};

// size must be >= |vocab|; larger tables quantize the distribution finer.
NegativeTable build_negative_table(const Vocabulary& vocab, size_t size);

}  // namespace conceptvec
