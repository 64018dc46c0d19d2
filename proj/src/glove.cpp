#include "conceptvec/glove.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "conceptvec/rng.hpp"

namespace conceptvec {

void GloveConfig::validate() const {
  if (!(x_max > 0)) throw ConfigError("x_max", "x_max > 0");
  if (!(weight_alpha > 0) || weight_alpha > 1)
    throw ConfigError("weight_alpha", "0 < weight_alpha <= 1");
  if (!(initial_step > 0)) throw ConfigError("initial_step", "initial_step > 0");
}

void CoocMatrix::add(uint32_t i, uint32_t j, double weight) {
  if (!(weight > 0)) throw std::invalid_argument("co-occurrence weight must be > 0");
  auto key = std::minmax(i, j);
  cells[{key.first, key.second}] += weight;
}

double CoocMatrix::at(uint32_t i, uint32_t j) const {
  auto key = std::minmax(i, j);
  auto it = cells.find({key.first, key.second});
  return it == cells.end() ? 0.0 : it->second;
}

CoocMatrix build_cooccurrence(const Corpus& corpus, size_t window) {
  if (window < 1) throw ConfigError("window", "window >= 1");
  CoocMatrix cooc;
  for (const auto& doc : corpus) {
    for (size_t i = 0; i < doc.size(); ++i) {
      for (size_t d = 1; d <= window && d <= i; ++d)
        cooc.add(doc[i], doc[i - d], 1.0 / static_cast<double>(d));
    }
  }
  return cooc;
}

double glove_weight(double x, const GloveConfig& config) {
  if (x >= config.x_max) return 1.0;
  return std::pow(x / config.x_max, config.weight_alpha);
}

template <typename T>
double glove_pair_loss_grad(std::span<const T> wi, std::span<const T> wj, T bi, T bj, double x,
                            const GloveConfig& config, std::span<T> grad_wi, std::span<T> grad_wj,
                            T& grad_bi, T& grad_bj) {
  const double f = glove_weight(x, config);
  double dot = 0.0;
  for (size_t t = 0; t < wi.size(); ++t)
    dot += static_cast<double>(wi[t]) * static_cast<double>(wj[t]);
  const double diff = dot + static_cast<double>(bi) + static_cast<double>(bj) - std::log(x);
  const double coef = 2.0 * f * diff;
  for (size_t t = 0; t < wi.size(); ++t) {
    grad_wi[t] += static_cast<T>(coef * static_cast<double>(wj[t]));
    grad_wj[t] += static_cast<T>(coef * static_cast<double>(wi[t]));
  }
  grad_bi += static_cast<T>(coef);
  grad_bj += static_cast<T>(coef);
  return f * diff * diff;
}

template double glove_pair_loss_grad<float>(std::span<const float>, std::span<const float>, float,
                                            float, double, const GloveConfig&, std::span<float>,
                                            std::span<float>, float&, float&);
template double glove_pair_loss_grad<double>(std::span<const double>, std::span<const double>,
                                             double, double, double, const GloveConfig&,
                                             std::span<double>, std::span<double>, double&,
                                             double&);

namespace {

struct GloveEntry {
  uint32_t i, j;
  double x;
};

}  // namespace

TrainResult train_glove(const CoocMatrix& cooc, size_t vocab_size, const TrainingConfig& config,
                        const GloveConfig& glove_config, std::ostream* progress) {
  config.validate();
  glove_config.validate();
  if (cooc.empty()) throw std::runtime_error("empty co-occurrence matrix");

  // Every stored cell is visited in both orientations, as a symmetric-window
  // scan would emit it.
  std::vector<GloveEntry> entries;
  entries.reserve(cooc.cells.size() * 2);
  for (const auto& [key, x] : cooc.cells) {
    if (key.second >= vocab_size)
      throw std::invalid_argument("co-occurrence index exceeds vocabulary size");
    entries.push_back({key.first, key.second, x});
    if (key.first != key.second) entries.push_back({key.second, key.first, x});
  }

  const size_t dim = config.dimension;
  EmbeddingMatrix m;
  m.rows = vocab_size;
  m.dimension = dim;
  m.sum_input_output = true;
  m.input.resize(vocab_size * dim);   // w
  m.output.resize(vocab_size * dim);  // w~
  std::vector<float> bias(vocab_size), bias_t(vocab_size);
  {
    Rng rng(Rng::derive(config.seed, 0x610E));
    const double half = 0.5 / static_cast<double>(dim);
    for (float& v : m.input) v = static_cast<float>(rng.uniform(-half, half));
    for (float& v : m.output) v = static_cast<float>(rng.uniform(-half, half));
    for (float& v : bias) v = static_cast<float>(rng.uniform(-half, half));
    for (float& v : bias_t) v = static_cast<float>(rng.uniform(-half, half));
  }

  // AdaGrad accumulators start at 1 so the first step equals initial_step.
  std::vector<float> acc_w(vocab_size * dim, 1.0f), acc_wt(vocab_size * dim, 1.0f);
  std::vector<float> acc_b(vocab_size, 1.0f), acc_bt(vocab_size, 1.0f);
  std::vector<float> grad_wi(dim), grad_wj(dim);

  const float step = static_cast<float>(glove_config.initial_step);
  std::vector<size_t> order(entries.size());
  for (size_t k = 0; k < order.size(); ++k) order[k] = k;

  auto total_loss = [&]() {
    double loss = 0.0;
    std::vector<float> gi(dim), gj(dim);
    float gbi = 0, gbj = 0;
    for (const auto& e : entries) {
      std::fill(gi.begin(), gi.end(), 0.0f);
      std::fill(gj.begin(), gj.end(), 0.0f);
      gbi = gbj = 0;
      loss += glove_pair_loss_grad<float>(m.input_row(e.i), m.output_row(e.j), bias[e.i],
                                          bias_t[e.j], e.x, glove_config, gi, gj, gbi, gbj);
    }
    return loss / static_cast<double>(entries.size());
  };

  TrainLog log;
  for (size_t epoch = 0; epoch < config.epochs; ++epoch) {
    Rng rng(Rng::derive(config.seed, 0x51AB + epoch));
    shuffle(order, rng);
    for (size_t k : order) {
      const auto& e = entries[k];
      std::fill(grad_wi.begin(), grad_wi.end(), 0.0f);
      std::fill(grad_wj.begin(), grad_wj.end(), 0.0f);
      float grad_bi = 0, grad_bj = 0;
      glove_pair_loss_grad<float>(m.input_row(e.i), m.output_row(e.j), bias[e.i], bias_t[e.j],
                                  e.x, glove_config, grad_wi, grad_wj, grad_bi, grad_bj);
      auto wi = m.input_row(e.i);
      auto wj = m.output_row(e.j);
      float* aw = acc_w.data() + e.i * dim;
      float* at = acc_wt.data() + e.j * dim;
      for (size_t t = 0; t < dim; ++t) {
        wi[t] -= step * grad_wi[t] / std::sqrt(aw[t]);
        aw[t] += grad_wi[t] * grad_wi[t];
        wj[t] -= step * grad_wj[t] / std::sqrt(at[t]);
        at[t] += grad_wj[t] * grad_wj[t];
      }
      bias[e.i] -= step * grad_bi / std::sqrt(acc_b[e.i]);
      acc_b[e.i] += grad_bi * grad_bi;
      bias_t[e.j] -= step * grad_bj / std::sqrt(acc_bt[e.j]);
      acc_bt[e.j] += grad_bj * grad_bj;
    }
    log.epoch_loss.push_back(total_loss());
    m.check_finite("epoch");
    if (progress)
      *progress << "epoch " << (epoch + 1) << '/' << config.epochs << " loss "
                << log.epoch_loss.back() << '\n';
  }
  return {std::move(m), std::move(log)};
}

}  // namespace conceptvec
