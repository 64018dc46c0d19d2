#pragma once

// Embedding persistence and queries: word2vec text format I/O, cosine
// similarity, nearest neighbours, averaged-word concept vectors and
// concept-coverage reports.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "conceptvec/vocab.hpp"

namespace conceptvec {

struct Embedding {
  std::vector<std::string> tokens;  // duplicate-free
  std::vector<float> vectors;       // row-major, tokens.size() x dimension
  size_t dimension = 0;

  size_t size() const { return tokens.size(); }
  std::span<const float> row(size_t i) const {
    return {vectors.data() + i * dimension, dimension};
  }
  std::span<float> row(size_t i) { return {vectors.data() + i * dimension, dimension}; }
  std::optional<size_t> find(std::string_view token) const;
  void rebuild_index();

 private:
  std::unordered_map<std::string, size_t, TransparentStringHash, std::equal_to<>> index_;
};

// Text format: "<count> <dim>\n" header, then one "token v1 ... vdim" line
// per token; floats are written with 6 significant digits, which float
// round-trips exactly. Load errors name the offending line.
void save_text(const Embedding& embedding, std::ostream& out);
void save_text(const Embedding& embedding, const std::string& path);
Embedding load_text(std::istream& in);
Embedding load_text(const std::string& path);

// Computed in double precision. Throws on zero vectors or dimension mismatch.
double cosine(std::span<const float> u, std::span<const float> v);
double cosine(std::span<const double> u, std::span<const double> v);

class UnknownTokenError : public std::runtime_error {
 public:
  UnknownTokenError(std::string_view token, std::vector<std::string> hints);
  const std::vector<std::string>& hints() const { return hints_; }

 private:
  std::vector<std::string> hints_;
};

struct Neighbor {
  std::string token;
  double similarity;
};

// Excludes the query token; type_filter, when non-empty, restricts candidates
// to tokens with that prefix before ranking. Ties break on ascending token.
// Unknown query tokens raise UnknownTokenError with edit-distance hints.
std::vector<Neighbor> nearest_neighbors(const Embedding& embedding, std::string_view token,
                                        size_t k, std::string_view type_filter = {});

struct AvgWordVector {
  std::vector<float> vector;
  size_t used_tokens = 0;
  size_t skipped_tokens = 0;  // name tokens missing from the word embedding
};

// Mean of the word vectors of the concept name's tokens (annotated-corpus
// tokenization). Throws if no name token is in the embedding.
AvgWordVector avg_word_vector(std::string_view concept_name, const Embedding& word_embedding);

struct CoverageReport {
  std::map<std::string, size_t> per_type;  // concept-type prefix -> token count
  size_t embedding_concepts = 0;
  size_t reference_size = 0;  // distinct reference ids
  size_t intersection = 0;
  size_t union_size = 0;

  double fraction() const {
    return reference_size == 0 ? 0.0
                               : static_cast<double>(intersection) /
                                     static_cast<double>(reference_size);
  }
  std::string to_tsv() const;
};

CoverageReport coverage_report(const Embedding& embedding,
                               const std::vector<std::string>& reference_ids);

}  // namespace conceptvec
