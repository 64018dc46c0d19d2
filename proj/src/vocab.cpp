#include "conceptvec/vocab.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "conceptvec/corpus.hpp"
#include "conceptvec/util.hpp"

namespace conceptvec {

Vocabulary Vocabulary::build(const std::unordered_map<std::string, int64_t>& counts,
                             int64_t min_count) {
  if (min_count < 1) throw std::invalid_argument("min_count must be >= 1");
  Vocabulary vocab;
  for (const auto& [token, count] : counts) {
    if (count >= min_count)
      vocab.entries_.push_back({token, count, is_concept_token(token)});
  }
  if (vocab.entries_.empty())
    throw std::runtime_error("vocabulary is empty: no token reaches min_count");
  std::sort(vocab.entries_.begin(), vocab.entries_.end(),
            [](const VocabEntry& a, const VocabEntry& b) {
              return a.count != b.count ? a.count > b.count : a.token < b.token;
            });
  vocab.finish();
  return vocab;
}

Vocabulary Vocabulary::build_from_stream(std::istream& corpus, int64_t min_count) {
  std::unordered_map<std::string, int64_t> counts;
  std::string token;
  while (corpus >> token) ++counts[token];
  return build(counts, min_count);
}

Vocabulary Vocabulary::build_from_tokens(const std::vector<std::string>& tokens,
                                         int64_t min_count) {
  std::unordered_map<std::string, int64_t> counts;
  for (const auto& t : tokens) ++counts[t];
  return build(counts, min_count);
}

void Vocabulary::finish() {
  index_.clear();
  total_tokens_ = 0;
  for (size_t i = 0; i < entries_.size(); ++i) {
    auto [it, inserted] = index_.emplace(entries_[i].token, static_cast<uint32_t>(i));
    if (!inserted) throw std::runtime_error("duplicate vocabulary token: " + entries_[i].token);
    total_tokens_ += entries_[i].count;
  }
}

std::optional<uint32_t> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void Vocabulary::save(std::ostream& out) const {
  out << "#total " << total_tokens_ << '\n';
  for (const auto& e : entries_) out << e.token << '\t' << e.count << '\n';
}

Vocabulary Vocabulary::load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || !line.starts_with("#total "))
    throw std::runtime_error("vocabulary file: missing '#total <N>' header");
  Vocabulary vocab;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error("vocabulary file line " + std::to_string(line_no) +
                               ": expected 'token<TAB>count'");
    std::string token = line.substr(0, tab);
    int64_t count = 0;
    auto sv = std::string_view(line).substr(tab + 1);
    auto [ptr, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), count);
    if (ec != std::errc() || ptr != sv.data() + sv.size() || count < 1)
      throw std::runtime_error("vocabulary file line " + std::to_string(line_no) +
                               ": bad count");
    vocab.entries_.push_back({std::move(token), count, false});
  }
  if (vocab.entries_.empty()) throw std::runtime_error("vocabulary file has no entries");
  for (auto& e : vocab.entries_) e.is_concept = is_concept_token(e.token);
  vocab.finish();
  return vocab;
}

double keep_probability(uint32_t token_index, const Vocabulary& vocab, double threshold) {
  if (threshold <= 0) throw std::invalid_argument("subsample threshold must be > 0");
  double f = static_cast<double>(vocab.entry(token_index).count) /
             static_cast<double>(vocab.total_tokens());
  return std::min(1.0, std::sqrt(threshold / f));
}

double keep_probability(std::string_view token, const Vocabulary& vocab, double threshold) {
  auto idx = vocab.find(token);
  if (!idx) throw std::out_of_range("token not in vocabulary: " + std::string(token));
  return keep_probability(*idx, vocab, threshold);
}

NegativeTable build_negative_table(const Vocabulary& vocab, size_t size) {
  if (size < vocab.size())
    throw std::invalid_argument("negative table size must be >= vocabulary size");
  constexpr double kPower = 0.75;
  double total_pow = 0.0;
  for (const auto& e : vocab.entries()) total_pow += std::pow(static_cast<double>(e.count), kPower);

  NegativeTable nt;
  nt.table.resize(size);
  size_t i = 0;
  double cumulative = std::pow(static_cast<double>(vocab.entry(0).count), kPower) / total_pow;
  for (size_t a = 0; a < size; ++a) {
    nt.table[a] = static_cast<uint32_t>(i);
    if (static_cast<double>(a + 1) / static_cast<double>(size) > cumulative &&
        i + 1 < vocab.size()) {
      ++i;
      cumulative += std::pow(static_cast<double>(vocab.entry(i).count), kPower) / total_pow;
    }
  }
  return nt;
}

}  // namespace conceptvec
