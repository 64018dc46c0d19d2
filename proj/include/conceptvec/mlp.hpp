#pragma once

// Minimal feed-forward network with exact gradients: ReLU hidden layers and
// a sigmoid (binary) or softmax (multiclass) head, trained by mini-batch
// SGD with momentum and early stopping. Used by both downstream protocols.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace conceptvec {

struct MlpLayer {
  size_t in = 0, out = 0;
  std::vector<double> w;  // row-major, out x in
  std::vector<double> b;  // out
};

struct Mlp {
  std::vector<size_t> sizes;  // [input, hidden..., output]
  std::vector<MlpLayer> layers;

  size_t input_size() const { return sizes.front(); }
  size_t output_size() const { return sizes.back(); }
  bool binary() const { return output_size() == 1; }

  // Glorot-uniform weights, zero biases; depends only on sizes and seed.
  static Mlp init(const std::vector<size_t>& sizes, uint64_t seed);

  uint64_t params_digest() const;
};

// Binary head: one probability in (0,1). Multiclass head: a simplex vector.
std::vector<double> mlp_forward(const Mlp& mlp, std::span<const double> input);

// Cross-entropy at the given target class (binary targets are 0 or 1).
double mlp_loss(const Mlp& mlp, std::span<const double> input, int target, double weight = 1.0);

struct MlpGradients {
  std::vector<MlpLayer> layers;  // same shapes as the model
};

MlpGradients mlp_backward(const Mlp& mlp, std::span<const double> input, int target,
                          double weight = 1.0);

struct TrainHyper {
  size_t batch = 128;
  double learning_rate = 0.01;
  size_t max_epochs = 100;
  size_t patience = 5;
  uint64_t seed = 1;
  double momentum = 0.9;
  std::vector<size_t> hidden = {400, 200};
};

struct MlpDataset {
  size_t dim = 0;
  std::vector<double> x;  // row-major
  std::vector<int> y;

  size_t size() const { return y.size(); }
  std::span<const double> row(size_t i) const { return {x.data() + i * dim, dim}; }
  void add(std::span<const double> features, int label);
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(size_t epoch)
      : std::runtime_error("training diverged (non-finite loss) at epoch " +
                           std::to_string(epoch)),
        epoch_(epoch) {}
  size_t epoch() const { return epoch_; }

 private:
  size_t epoch_;
};

struct FitResult {
  Mlp model;  // parameters restored from the best-validation epoch
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  size_t best_epoch = 0;  // 1-based
  size_t epochs_run = 0;
};

// Mini-batch SGD with momentum; stops when validation loss has not improved
// for more than `patience` epochs and restores the best parameters.
// class_weights, when non-empty, scale each instance's loss by its label's
// weight. Deterministic for a fixed seed.
FitResult train_mlp(Mlp model, const MlpDataset& train, const MlpDataset& validation,
                    const TrainHyper& hyper, const std::vector<double>& class_weights = {});

}  // namespace conceptvec
