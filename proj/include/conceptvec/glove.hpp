#pragma once

// Distance-weighted global co-occurrence counting and the GloVe
// weighted-least-squares trainer with per-parameter adaptive steps.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "conceptvec/trainers.hpp"

namespace conceptvec {

struct GloveConfig {
  double x_max = 100.0;
  double weight_alpha = 0.75;
  double initial_step = 0.05;

  void validate() const;
};

// Symmetric sparse co-occurrence counts; cells are stored once per unordered
// pair under (min, max) keys, so at(i, j) == at(j, i) by construction.
struct CoocMatrix {
  std::map<std::pair<uint32_t, uint32_t>, double> cells;

  void add(uint32_t i, uint32_t j, double weight);
  double at(uint32_t i, uint32_t j) const;  // 0 when absent
  bool empty() const { return cells.empty(); }
};

// For each pair of tokens at distance d <= window inside one document, adds
// 1/d to the pair's cell. Document boundaries reset the scan; no
// subsampling is applied.
CoocMatrix build_cooccurrence(const Corpus& corpus, size_t window);

// (x / x_max)^alpha clipped at 1.
double glove_weight(double x, const GloveConfig& config);

// Loss term f(x) * (wi.wj + bi + bj - log x)^2 and its exact gradients
// (accumulated into the grad arguments). Shared by the trainer and the
// finite-difference audit.
template <typename T>
double glove_pair_loss_grad(std::span<const T> wi, std::span<const T> wj, T bi, T bj, double x,
                            const GloveConfig& config, std::span<T> grad_wi, std::span<T> grad_wj,
                            T& grad_bi, T& grad_bj);

// Minimizes the weighted least-squares objective over both orientations of
// every stored cell. epoch_loss entries are full-objective evaluations taken
// after each epoch; the exported row for token i is w_i + w~_i.
TrainResult train_glove(const CoocMatrix& cooc, size_t vocab_size, const TrainingConfig& config,
                        const GloveConfig& glove_config, std::ostream* progress = nullptr);

extern template double glove_pair_loss_grad<float>(std::span<const float>, std::span<const float>,
                                                   float, float, double, const GloveConfig&,
                                                   std::span<float>, std::span<float>, float&,
                                                   float&);
extern template double glove_pair_loss_grad<double>(std::span<const double>,
                                                    std::span<const double>, double, double,
                                                    double, const GloveConfig&, std::span<double>,
                                                    std::span<double>, double&, double&);

}  // namespace conceptvec
