#pragma once

// Embedding training: CBOW and skip-gram with negative sampling, and the
// fastText variant that suppresses character n-grams for concept tokens.
// GloVe lives in glove.hpp.

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "conceptvec/embedding.hpp"
#include "conceptvec/vocab.hpp"

namespace conceptvec {

enum class ModelType { Cbow, SkipGram, Glove, FastTextVariant };

std::string_view model_type_name(ModelType model);
std::optional<ModelType> parse_model_type(std::string_view name);

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct TrainingConfig {
  size_t dimension = 200;
  size_t window = 20;
  size_t negatives = 5;
  double subsample_threshold = 1e-3;
  int64_t min_count = 5;
  double learning_rate = 0.025;
  size_t epochs = 10;
  ModelType model = ModelType::Cbow;
  uint64_t seed = 1;
  size_t workers = 1;

  void validate() const;  // throws ConfigError naming the offending field
};

struct FastTextConfig {
  size_t min_ngram = 2;
  size_t max_ngram = 3;
  size_t bucket_count = 2'000'000;

  void validate() const;
};

struct EmbeddingMatrix {
  size_t rows = 0;
  size_t dimension = 0;
  std::vector<float> input;    // rows x dimension
  std::vector<float> output;   // rows x dimension
  std::vector<float> subword;  // bucket_count x dimension, fastText only
  // Per-word character n-gram buckets, empty rows for concept tokens.
  std::vector<std::vector<uint32_t>> word_buckets;
  bool sum_input_output = false;  // GloVe: exported row is input + output

  std::span<float> input_row(size_t i) { return {input.data() + i * dimension, dimension}; }
  std::span<const float> input_row(size_t i) const {
    return {input.data() + i * dimension, dimension};
  }
  std::span<float> output_row(size_t i) { return {output.data() + i * dimension, dimension}; }
  std::span<const float> output_row(size_t i) const {
    return {output.data() + i * dimension, dimension};
  }
  std::span<float> subword_row(size_t b) { return {subword.data() + b * dimension, dimension}; }
  std::span<const float> subword_row(size_t b) const {
    return {subword.data() + b * dimension, dimension};
  }

  // Input representation of word i: the token row alone, or, when the word
  // has subword buckets, the mean of the token row and its bucket rows.
  std::vector<float> representation(size_t i) const;

  void check_finite(const char* stage) const;  // throws on NaN/Inf
};

struct TrainLog {
  std::vector<double> epoch_loss;           // mean loss per center token
  uint64_t center_tokens_processed = 0;
};

struct TrainResult {
  EmbeddingMatrix matrix;
  TrainLog log;
};

// One document per inner vector; document boundaries reset the context
// window. Out-of-vocabulary tokens are dropped at load time.
using Corpus = std::vector<std::vector<uint32_t>>;

Corpus load_corpus_ids(std::istream& in, const Vocabulary& vocab);
uint64_t corpus_token_count(const Corpus& corpus);

// Seeded starting point shared by all trainers: input rows (and subword
// rows, when present) uniform in [-0.5/dim, 0.5/dim], output rows zero.
EmbeddingMatrix init_matrix(size_t rows, size_t dimension, uint64_t seed,
                            size_t subword_rows = 0);

// One negative-sampling gradient step: ascent on
//   log sigma(u.v+) + sum_n log sigma(-u.v-_n),
// updating all vectors in place from their pre-step values. Returns the loss
// contribution -log sigma(u.v+) - sum_n log sigma(-u.v-_n).
template <typename T>
double sgns_step(std::span<T> center, std::span<T> positive,
                 std::span<const std::span<T>> negatives, T learning_rate);

TrainResult train_cbow(const Corpus& corpus, const Vocabulary& vocab,
                       const TrainingConfig& config, std::ostream* progress = nullptr);
TrainResult train_skipgram(const Corpus& corpus, const Vocabulary& vocab,
                           const TrainingConfig& config, std::ostream* progress = nullptr);
TrainResult train_fasttext_variant(const Corpus& corpus, const Vocabulary& vocab,
                                   const TrainingConfig& config, const FastTextConfig& ft,
                                   std::ostream* progress = nullptr);

// Character n-grams of the '<word>'-delimited form, lengths min_n..max_n,
// in order of (start position, length).
std::vector<std::string> char_ngrams(std::string_view word, size_t min_n, size_t max_n);

// FNV-1a over each n-gram, reduced modulo bucket_count.
std::vector<uint32_t> subword_buckets(std::string_view word, const FastTextConfig& ft);

// Input vectors (GloVe: input + output summed; fastText: composed
// representation). concept_only restricts to concept tokens.
Embedding export_embedding(const EmbeddingMatrix& matrix, const Vocabulary& vocab,
                           bool concept_only);

extern template double sgns_step<float>(std::span<float>, std::span<float>,
                                        std::span<const std::span<float>>, float);
extern template double sgns_step<double>(std::span<double>, std::span<double>,
                                         std::span<const std::span<double>>, double);

}  // namespace conceptvec
