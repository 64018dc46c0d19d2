#pragma once

// Extrinsic evaluation protocols: protein-pair classification over
// concatenated concept vectors and averaged-sentence DDI classification,
// both on the shared feed-forward network.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "conceptvec/embedding.hpp"
#include "conceptvec/mlp.hpp"

namespace conceptvec {

struct PairInstance {
  std::string token_a, token_b;
  int label = 0;  // 1 positive, 0 negative
};

struct PpiData {
  std::vector<PairInstance> instances;
  size_t dropped = 0;  // pairs with a token missing from the embedding
};

// `token_a<TAB>token_b<TAB>label(0|1)` lines; pairs with unknown tokens are
// dropped and counted.
PpiData load_ppi_file(std::istream& in, const Embedding& embedding);

// [vec(token_a); vec(token_b)] in file order; not symmetrized.
std::vector<double> ppi_features(const PairInstance& pair, const Embedding& embedding);

struct SplitSpec {
  double train = 0.63;
  double validation = 0.07;
  double test = 0.30;
  uint64_t seed = 1;

  void validate() const;  // fractions must sum to 1
};

struct SplitIndices {
  std::vector<size_t> train, validation, test;
  uint64_t digest() const;
};

SplitIndices split_indices(size_t n, const SplitSpec& spec);

struct BinaryMetrics {
  double precision = 0, recall = 0, f1 = 0;
  std::optional<double> auc;  // empty when labels are single-class
  size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

// P/R/F1 at the threshold with the 0/0 := 0 convention; AUC by the rank
// statistic with ties counted as one half.
BinaryMetrics evaluate_binary(const std::vector<double>& scores, const std::vector<int>& labels,
                              double threshold = 0.5);

struct PpiReport {
  BinaryMetrics metrics;
  size_t n_train = 0, n_validation = 0, n_test = 0;
  size_t dropped_instances = 0;
  uint64_t split_digest = 0;  // embedding-independent for a fixed seed
  uint64_t init_digest = 0;
  size_t best_epoch = 0, epochs_run = 0;
};

// Split by spec.seed, train with early stopping, report test metrics. The
// split and the initial network depend only on the seeds and sizes, never on
// the embedding values, so embeddings can be compared under one protocol.
PpiReport run_ppi(const PpiData& data, const Embedding& embedding, const SplitSpec& split,
                  const TrainHyper& hyper);

enum class DdiLabel { Mechanism, Effect, Advice, Int, Negative };
inline constexpr size_t kDdiClassCount = 5;
inline constexpr std::array<DdiLabel, 4> kDdiPositiveLabels = {
    DdiLabel::Mechanism, DdiLabel::Effect, DdiLabel::Advice, DdiLabel::Int};

std::string_view ddi_label_name(DdiLabel label);
std::optional<DdiLabel> parse_ddi_label(std::string_view name);

struct DdiInstance {
  std::vector<std::string> sentence_tokens;
  std::string drug_a, drug_b;  // must occur among sentence_tokens
  DdiLabel label = DdiLabel::Negative;
};

// One JSON object per line: {"tokens": [...], "drug_a": ..., "drug_b": ...,
// "label": "mechanism|effect|advice|int|negative"}.
std::vector<DdiInstance> load_ddi_file(std::istream& in);

struct SenFeatures {
  std::vector<double> features;  // dim, or 3*dim when augmented
  size_t oov_tokens = 0;         // sentence tokens missing from the embedding
  size_t missing_drugs = 0;      // augmented drug slots filled with zeros
};

// Mean of the in-vocabulary sentence token vectors; augment_concepts appends
// the two drug vectors. Throws when no sentence token is in the embedding.
SenFeatures sen_features(const DdiInstance& instance, const Embedding& embedding,
                         bool augment_concepts);

struct DdiMetrics {
  double micro_precision = 0, micro_recall = 0, micro_f1 = 0;
  std::array<double, 4> per_type_f1{};  // mechanism, effect, advice, int
};

// Micro-averaged over the four positive types only; the negative class
// contributes no TP.
DdiMetrics evaluate_ddi(const std::vector<DdiLabel>& predictions,
                        const std::vector<DdiLabel>& gold);

struct DdiSeedRun {
  uint64_t seed = 0;
  DdiMetrics metrics;
  uint64_t split_digest = 0;
  uint64_t init_digest = 0;
  size_t best_epoch = 0;
};

struct DdiReport {
  std::vector<DdiSeedRun> runs;
  DdiMetrics mean;
  size_t oov_tokens = 0;
  size_t missing_drugs = 0;
};

// Trains the averaged-sentence classifier once per seed (a validation slice
// is carved from the training set for early stopping) and reports per-seed
// plus mean metrics.
DdiReport run_ddi(const std::vector<DdiInstance>& train, const std::vector<DdiInstance>& test,
                  const Embedding& embedding, const TrainHyper& hyper,
                  const std::vector<uint64_t>& seeds, bool augment_concepts = true,
                  double validation_fraction = 0.1);

}  // namespace conceptvec
