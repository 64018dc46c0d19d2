#include "conceptvec/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "conceptvec/rng.hpp"
#include "conceptvec/util.hpp"

namespace conceptvec {

Mlp Mlp::init(const std::vector<size_t>& sizes, uint64_t seed) {
  if (sizes.size() < 2) throw std::invalid_argument("Mlp needs at least input and output sizes");
  for (size_t s : sizes)
    if (s == 0) throw std::invalid_argument("Mlp layer sizes must be >= 1");
  Mlp mlp;
  mlp.sizes = sizes;
  Rng rng(Rng::derive(seed, 0x3D17));
  for (size_t l = 0; l + 1 < sizes.size(); ++l) {
    MlpLayer layer;
    layer.in = sizes[l];
    layer.out = sizes[l + 1];
    layer.w.resize(layer.in * layer.out);
    layer.b.assign(layer.out, 0.0);
    double bound = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
    for (double& v : layer.w) v = rng.uniform(-bound, bound);
    mlp.layers.push_back(std::move(layer));
  }
  return mlp;
}

uint64_t Mlp::params_digest() const {
  uint64_t h = kFnvOffset;
  for (const auto& layer : layers) {
    h = fnv1a64(layer.w.data(), layer.w.size() * sizeof(double), h);
    h = fnv1a64(layer.b.data(), layer.b.size() * sizeof(double), h);
  }
  return h;
}

namespace {

struct Activations {
  // post[0] is the input; post[l+1] the output of layer l (after ReLU for
  // hidden layers, raw logits for the last layer).
  std::vector<std::vector<double>> post;
};

Activations forward_raw(const Mlp& mlp, std::span<const double> input) {
  if (input.size() != mlp.input_size())
    throw std::invalid_argument("mlp_forward: input size mismatch");
  Activations acts;
  acts.post.emplace_back(input.begin(), input.end());
  for (size_t l = 0; l < mlp.layers.size(); ++l) {
    const auto& layer = mlp.layers[l];
    const auto& prev = acts.post.back();
    std::vector<double> z(layer.out);
    for (size_t o = 0; o < layer.out; ++o) {
      double s = layer.b[o];
      const double* wrow = layer.w.data() + o * layer.in;
      for (size_t i = 0; i < layer.in; ++i) s += wrow[i] * prev[i];
      z[o] = s;
    }
    if (l + 1 < mlp.layers.size())
      for (double& v : z) v = std::max(0.0, v);
    acts.post.push_back(std::move(z));
  }
  return acts;
}

std::vector<double> head_probabilities(const Mlp& mlp, const std::vector<double>& logits) {
  if (mlp.binary()) return {1.0 / (1.0 + std::exp(-logits[0]))};
  double zmax = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - zmax);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

double head_loss(const Mlp& mlp, const std::vector<double>& logits, int target) {
  if (mlp.binary()) {
    // -(y log p + (1-y) log(1-p)) computed from the logit for stability
    double z = logits[0];
    double y = static_cast<double>(target);
    return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
  }
  double zmax = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - zmax);
  return std::log(sum) + zmax - logits[static_cast<size_t>(target)];
}

void check_target(const Mlp& mlp, int target) {
  int limit = mlp.binary() ? 2 : static_cast<int>(mlp.output_size());
  if (target < 0 || target >= limit)
    throw std::invalid_argument("target class out of range");
}

}  // namespace

std::vector<double> mlp_forward(const Mlp& mlp, std::span<const double> input) {
  auto acts = forward_raw(mlp, input);
  return head_probabilities(mlp, acts.post.back());
}

double mlp_loss(const Mlp& mlp, std::span<const double> input, int target, double weight) {
  check_target(mlp, target);
  auto acts = forward_raw(mlp, input);
  return weight * head_loss(mlp, acts.post.back(), target);
}

MlpGradients mlp_backward(const Mlp& mlp, std::span<const double> input, int target,
                          double weight) {
  check_target(mlp, target);
  auto acts = forward_raw(mlp, input);
  auto probs = head_probabilities(mlp, acts.post.back());

  // dL/dz for both heads is p - onehot(target), scaled by the weight.
  std::vector<double> delta(mlp.output_size());
  if (mlp.binary()) {
    delta[0] = weight * (probs[0] - static_cast<double>(target));
  } else {
    for (size_t i = 0; i < delta.size(); ++i)
      delta[i] = weight * (probs[i] - (static_cast<int>(i) == target ? 1.0 : 0.0));
  }

  MlpGradients grads;
  grads.layers.resize(mlp.layers.size());
  for (size_t l = mlp.layers.size(); l-- > 0;) {
    const auto& layer = mlp.layers[l];
    auto& g = grads.layers[l];
    g.in = layer.in;
    g.out = layer.out;
    g.w.assign(layer.w.size(), 0.0);
    g.b.assign(layer.b.size(), 0.0);
    const auto& prev = acts.post[l];
    for (size_t o = 0; o < layer.out; ++o) {
      g.b[o] = delta[o];
      double* grow = g.w.data() + o * layer.in;
      for (size_t i = 0; i < layer.in; ++i) grow[i] = delta[o] * prev[i];
    }
    if (l > 0) {
      std::vector<double> prev_delta(layer.in, 0.0);
      for (size_t o = 0; o < layer.out; ++o) {
        const double* wrow = layer.w.data() + o * layer.in;
        for (size_t i = 0; i < layer.in; ++i) prev_delta[i] += wrow[i] * delta[o];
      }
      // ReLU gate: units at or below zero pass no gradient
      for (size_t i = 0; i < layer.in; ++i)
        if (acts.post[l][i] <= 0.0) prev_delta[i] = 0.0;
      delta = std::move(prev_delta);
    }
  }
  return grads;
}

void MlpDataset::add(std::span<const double> features, int label) {
  if (dim == 0) dim = features.size();
  if (features.size() != dim) throw std::invalid_argument("MlpDataset: feature size mismatch");
  x.insert(x.end(), features.begin(), features.end());
  y.push_back(label);
}

namespace {

double dataset_loss(const Mlp& mlp, const MlpDataset& data,
                    const std::vector<double>& class_weights) {
  if (data.size() == 0) return 0.0;
  double sum = 0.0;
  for (size_t i = 0; i < data.size(); ++i) {
    double w = class_weights.empty() ? 1.0 : class_weights[static_cast<size_t>(data.y[i])];
    sum += mlp_loss(mlp, data.row(i), data.y[i], w);
  }
  return sum / static_cast<double>(data.size());
}

}  // namespace

FitResult train_mlp(Mlp model, const MlpDataset& train, const MlpDataset& validation,
                    const TrainHyper& hyper, const std::vector<double>& class_weights) {
  if (train.size() == 0 || validation.size() == 0)
    throw std::invalid_argument("train_mlp: empty train or validation set");
  if (hyper.batch < 1 || hyper.max_epochs < 1 || !(hyper.learning_rate > 0))
    throw std::invalid_argument("train_mlp: bad hyperparameters");

  // momentum velocities, same shapes as the model
  std::vector<MlpLayer> velocity;
  for (const auto& layer : model.layers) {
    MlpLayer v;
    v.in = layer.in;
    v.out = layer.out;
    v.w.assign(layer.w.size(), 0.0);
    v.b.assign(layer.b.size(), 0.0);
    velocity.push_back(std::move(v));
  }

  FitResult result;
  std::vector<size_t> order(train.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  double best_val = std::numeric_limits<double>::infinity();
  std::vector<MlpLayer> best_layers = model.layers;
  size_t bad_epochs = 0;

  for (size_t epoch = 1; epoch <= hyper.max_epochs; ++epoch) {
    Rng rng(Rng::derive(hyper.seed, 0xE90C + epoch));
    shuffle(order, rng);

    double epoch_loss = 0.0;
    for (size_t start = 0; start < order.size(); start += hyper.batch) {
      size_t end = std::min(order.size(), start + hyper.batch);
      MlpGradients acc;
      bool first = true;
      for (size_t k = start; k < end; ++k) {
        size_t i = order[k];
        double w = class_weights.empty() ? 1.0 : class_weights[static_cast<size_t>(train.y[i])];
        epoch_loss += mlp_loss(model, train.row(i), train.y[i], w);
        auto g = mlp_backward(model, train.row(i), train.y[i], w);
        if (first) {
          acc = std::move(g);
          first = false;
        } else {
          for (size_t l = 0; l < acc.layers.size(); ++l) {
            for (size_t t = 0; t < acc.layers[l].w.size(); ++t)
              acc.layers[l].w[t] += g.layers[l].w[t];
            for (size_t t = 0; t < acc.layers[l].b.size(); ++t)
              acc.layers[l].b[t] += g.layers[l].b[t];
          }
        }
      }
      const double scale = 1.0 / static_cast<double>(end - start);
      for (size_t l = 0; l < model.layers.size(); ++l) {
        auto& layer = model.layers[l];
        auto& vel = velocity[l];
        const auto& g = acc.layers[l];
        for (size_t t = 0; t < layer.w.size(); ++t) {
          vel.w[t] = hyper.momentum * vel.w[t] - hyper.learning_rate * g.w[t] * scale;
          layer.w[t] += vel.w[t];
        }
        for (size_t t = 0; t < layer.b.size(); ++t) {
          vel.b[t] = hyper.momentum * vel.b[t] - hyper.learning_rate * g.b[t] * scale;
          layer.b[t] += vel.b[t];
        }
      }
    }
    epoch_loss /= static_cast<double>(train.size());
    double val_loss = dataset_loss(model, validation, class_weights);
    if (!std::isfinite(epoch_loss) || !std::isfinite(val_loss)) throw DivergenceError(epoch);

    result.train_loss.push_back(epoch_loss);
    result.val_loss.push_back(val_loss);
    result.epochs_run = epoch;

    if (val_loss < best_val) {
      best_val = val_loss;
      best_layers = model.layers;
      result.best_epoch = epoch;
      bad_epochs = 0;
    } else {
      ++bad_epochs;
      if (bad_epochs > hyper.patience) break;
    }
  }

  model.layers = std::move(best_layers);
  result.model = std::move(model);
  return result;
}

}  // namespace conceptvec
