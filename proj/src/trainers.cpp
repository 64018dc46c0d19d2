#include "conceptvec/trainers.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <istream>
#include <ostream>
#include <thread>

#include "conceptvec/corpus.hpp"
#include "conceptvec/rng.hpp"
#include "conceptvec/util.hpp"

namespace conceptvec {

std::string_view model_type_name(ModelType model) {
  switch (model) {
    case ModelType::Cbow: return "cbow";
    case ModelType::SkipGram: return "skipgram";
    case ModelType::Glove: return "glove";
    case ModelType::FastTextVariant: return "fasttext";
  }
  return "?";
}

std::optional<ModelType> parse_model_type(std::string_view name) {
  if (name == "cbow") return ModelType::Cbow;
  if (name == "skipgram" || name == "skip-gram") return ModelType::SkipGram;
  if (name == "glove") return ModelType::Glove;
  if (name == "fasttext") return ModelType::FastTextVariant;
  return std::nullopt;
}

void TrainingConfig::validate() const {
  if (dimension < 1) throw ConfigError("dimension", "dimension >= 1");
  if (window < 1) throw ConfigError("window", "window >= 1");
  if (negatives < 1) throw ConfigError("negatives", "negatives >= 1");
  if (!(subsample_threshold > 0))
    throw ConfigError("subsample_threshold", "subsample_threshold > 0");
  if (min_count < 1) throw ConfigError("min_count", "min_count >= 1");
  if (!(learning_rate > 0)) throw ConfigError("learning_rate", "learning_rate > 0");
  if (epochs < 1) throw ConfigError("epochs", "epochs >= 1");
  if (workers < 1) throw ConfigError("workers", "workers >= 1");
}

void FastTextConfig::validate() const {
  if (min_ngram < 1) throw ConfigError("min_ngram", "min_ngram >= 1");
  if (max_ngram < min_ngram) throw ConfigError("max_ngram", "min_ngram <= max_ngram");
  if (bucket_count < 1) throw ConfigError("bucket_count", "bucket_count >= 1");
}

std::vector<float> EmbeddingMatrix::representation(size_t i) const {
  std::vector<float> out(input_row(i).begin(), input_row(i).end());
  if (word_buckets.empty() || word_buckets[i].empty()) return out;
  const auto& buckets = word_buckets[i];
  for (uint32_t b : buckets) {
    auto row = subword_row(b);
    for (size_t j = 0; j < dimension; ++j) out[j] += row[j];
  }
  float scale = 1.0f / static_cast<float>(1 + buckets.size());
  for (float& v : out) v *= scale;
  return out;
}

void EmbeddingMatrix::check_finite(const char* stage) const {
  auto scan = [&](const std::vector<float>& m, const char* name) {
    for (float v : m)
      if (!std::isfinite(v))
        throw std::runtime_error(std::string("non-finite ") + name + " weight after " + stage);
  };
  scan(input, "input");
  scan(output, "output");
  scan(subword, "subword");
}

Corpus load_corpus_ids(std::istream& in, const Vocabulary& vocab) {
  Corpus corpus;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<uint32_t> doc;
    for (auto tok : split_whitespace(line)) {
      if (auto idx = vocab.find(tok)) doc.push_back(*idx);
    }
    if (!doc.empty()) corpus.push_back(std::move(doc));
  }
  return corpus;
}

uint64_t corpus_token_count(const Corpus& corpus) {
  uint64_t n = 0;
  for (const auto& doc : corpus) n += doc.size();
  return n;
}

EmbeddingMatrix init_matrix(size_t rows, size_t dimension, uint64_t seed, size_t subword_rows) {
  EmbeddingMatrix m;
  m.rows = rows;
  m.dimension = dimension;
  m.input.resize(rows * dimension);
  m.output.assign(rows * dimension, 0.0f);
  Rng rng(Rng::derive(seed, 0x1817));
  const double half = 0.5 / static_cast<double>(dimension);
  for (float& v : m.input) v = static_cast<float>(rng.uniform(-half, half));
  if (subword_rows > 0) {
    m.subword.resize(subword_rows * dimension);
    for (float& v : m.subword) v = static_cast<float>(rng.uniform(-half, half));
  }
  return m;
}

namespace {

double log_sigmoid(double x) {
  // log(1/(1+e^-x)) without overflow on either tail
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

// rows[0] is the positive target, the rest are negatives. Accumulates the
// objective gradient wrt u into grad_u (unscaled) and applies +lr*g*u to
// each row; both sides read pre-step values, so the combined update is the
// simultaneous gradient. Returns the loss contribution.
template <typename T>
double sgns_rows_update(const T* u, size_t dim, T* grad_u, T* const* rows, size_t n_rows, T lr) {
  double loss = 0.0;
  for (size_t r = 0; r < n_rows; ++r) {
    T* v = rows[r];
    double dot = 0.0;
    for (size_t j = 0; j < dim; ++j) dot += static_cast<double>(u[j]) * static_cast<double>(v[j]);
    const double label = r == 0 ? 1.0 : 0.0;
    const double sig = 1.0 / (1.0 + std::exp(-dot));
    const T g = static_cast<T>(label - sig);
    loss -= r == 0 ? log_sigmoid(dot) : log_sigmoid(-dot);
    for (size_t j = 0; j < dim; ++j) {
      const T vj = v[j];
      grad_u[j] += g * vj;
      v[j] = vj + lr * g * u[j];
    }
  }
  return loss;
}

}  // namespace

template <typename T>
double sgns_step(std::span<T> center, std::span<T> positive,
                 std::span<const std::span<T>> negatives, T learning_rate) {
  const size_t dim = center.size();
  if (positive.size() != dim)
    throw std::invalid_argument("sgns_step: dimension mismatch");
  std::vector<T*> rows;
  rows.reserve(1 + negatives.size());
  rows.push_back(positive.data());
  for (const auto& n : negatives) {
    if (n.size() != dim) throw std::invalid_argument("sgns_step: dimension mismatch");
    rows.push_back(n.data());
  }
  std::vector<T> grad(dim, T(0));
  double loss =
      sgns_rows_update<T>(center.data(), dim, grad.data(), rows.data(), rows.size(), learning_rate);
  for (size_t j = 0; j < dim; ++j) center[j] += learning_rate * grad[j];
  return loss;
}

template double sgns_step<float>(std::span<float>, std::span<float>,
                                 std::span<const std::span<float>>, float);
template double sgns_step<double>(std::span<double>, std::span<double>,
                                  std::span<const std::span<double>>, double);

std::vector<std::string> char_ngrams(std::string_view word, size_t min_n, size_t max_n) {
  std::string padded = "<" + std::string(word) + ">";
  std::vector<std::string> grams;
  for (size_t start = 0; start < padded.size(); ++start) {
    for (size_t len = min_n; len <= max_n && start + len <= padded.size(); ++len)
      grams.push_back(padded.substr(start, len));
  }
  return grams;
}

std::vector<uint32_t> subword_buckets(std::string_view word, const FastTextConfig& ft) {
  std::vector<uint32_t> buckets;
  for (const auto& gram : char_ngrams(word, ft.min_ngram, ft.max_ngram))
    buckets.push_back(static_cast<uint32_t>(fnv1a64(gram) % ft.bucket_count));
  return buckets;
}

namespace {

enum class SgnsKind { Cbow, SkipGram, FastText };

constexpr size_t kNegativeTableSize = 1'000'000;

struct SgnsShared {
  const Corpus* corpus = nullptr;
  const TrainingConfig* cfg = nullptr;
  EmbeddingMatrix* matrix = nullptr;
  NegativeTable table;
  std::vector<double> keep;
  uint64_t total_tokens = 0;
  std::atomic<uint64_t> processed{0};
};

struct WorkerTally {
  double loss = 0.0;
  uint64_t centers = 0;
};

void sgns_worker(SgnsShared& sh, SgnsKind kind, size_t worker_id, size_t epoch,
                 WorkerTally& tally) {
  const Corpus& corpus = *sh.corpus;
  const TrainingConfig& cfg = *sh.cfg;
  EmbeddingMatrix& m = *sh.matrix;
  const size_t dim = cfg.dimension;
  const size_t n_neg = cfg.negatives;
  const double lr_floor = cfg.learning_rate / 10'000.0;
  const double denom = static_cast<double>(cfg.epochs) * static_cast<double>(sh.total_tokens) + 1.0;

  Rng rng(Rng::derive(cfg.seed, 0xC0FFEE + epoch * cfg.workers + worker_id));
  std::vector<uint32_t> survivors;
  std::vector<float> hidden(dim), grad(dim);
  std::vector<float*> rows(1 + n_neg);

  // word2vec redraw rule: a negative may not equal the positive target or
  // the center. Degenerate vocabularies can make that impossible; give up
  // after a bounded number of attempts.
  auto draw_negative = [&](uint32_t forbid_a, uint32_t forbid_b) -> std::optional<uint32_t> {
    for (int attempt = 0; attempt < 64; ++attempt) {
      uint32_t t = sh.table.draw(rng);
      if (t != forbid_a && t != forbid_b) return t;
    }
    return std::nullopt;
  };

  double alpha = cfg.learning_rate;
  for (size_t d = worker_id; d < corpus.size(); d += cfg.workers) {
    const auto& doc = corpus[d];
    uint64_t done = sh.processed.fetch_add(doc.size(), std::memory_order_relaxed);
    alpha = cfg.learning_rate * (1.0 - static_cast<double>(done) / denom);
    if (alpha < lr_floor) alpha = lr_floor;
    const float lr = static_cast<float>(alpha);

    survivors.clear();
    for (uint32_t id : doc) {
      double p = sh.keep[id];
      if (p >= 1.0 || rng.uniform() < p) survivors.push_back(id);
    }
    const size_t n = survivors.size();

    for (size_t i = 0; i < n; ++i) {
      const uint32_t center = survivors[i];
      const size_t radius = 1 + rng.uniform_u32(static_cast<uint32_t>(cfg.window));
      const size_t lo = i > radius ? i - radius : 0;
      const size_t hi = std::min(n - 1, i + radius);

      if (kind == SgnsKind::Cbow) {
        std::fill(hidden.begin(), hidden.end(), 0.0f);
        size_t context_count = 0;
        for (size_t j = lo; j <= hi; ++j) {
          if (j == i) continue;
          auto row = m.input_row(survivors[j]);
          for (size_t t = 0; t < dim; ++t) hidden[t] += row[t];
          ++context_count;
        }
        if (context_count == 0) continue;
        const float inv = 1.0f / static_cast<float>(context_count);
        for (float& v : hidden) v *= inv;

        size_t nr = 0;
        rows[nr++] = m.output_row(center).data();
        for (size_t s = 0; s < n_neg; ++s) {
          if (auto t = draw_negative(center, center)) rows[nr++] = m.output_row(*t).data();
        }
        std::fill(grad.begin(), grad.end(), 0.0f);
        tally.loss += sgns_rows_update<float>(hidden.data(), dim, grad.data(), rows.data(), nr, lr);
        ++tally.centers;
        // d(mean)/d(context_j) = 1/C
        for (size_t j = lo; j <= hi; ++j) {
          if (j == i) continue;
          auto row = m.input_row(survivors[j]);
          for (size_t t = 0; t < dim; ++t) row[t] += lr * inv * grad[t];
        }
      } else {
        static const std::vector<uint32_t> kNoBuckets;
        const bool composed = kind == SgnsKind::FastText && !m.word_buckets[center].empty();
        const auto& buckets = composed ? m.word_buckets[center] : kNoBuckets;
        double center_loss = 0.0;
        bool trained = false;
        for (size_t j = lo; j <= hi; ++j) {
          if (j == i) continue;
          const uint32_t ctx = survivors[j];

          float* u_ptr;
          float comp_scale = 1.0f;
          if (composed) {
            auto base = m.input_row(center);
            std::copy(base.begin(), base.end(), hidden.begin());
            for (uint32_t b : buckets) {
              auto row = m.subword_row(b);
              for (size_t t = 0; t < dim; ++t) hidden[t] += row[t];
            }
            comp_scale = 1.0f / static_cast<float>(1 + buckets.size());
            for (float& v : hidden) v *= comp_scale;
            u_ptr = hidden.data();
          } else {
            u_ptr = m.input_row(center).data();
          }

          size_t nr = 0;
          rows[nr++] = m.output_row(ctx).data();
          for (size_t s = 0; s < n_neg; ++s) {
            if (auto t = draw_negative(ctx, center)) rows[nr++] = m.output_row(*t).data();
          }
          std::fill(grad.begin(), grad.end(), 0.0f);
          center_loss += sgns_rows_update<float>(u_ptr, dim, grad.data(), rows.data(), nr, lr);

          if (composed) {
            const float scale = lr * comp_scale;
            auto base = m.input_row(center);
            for (size_t t = 0; t < dim; ++t) base[t] += scale * grad[t];
            for (uint32_t b : buckets) {
              auto row = m.subword_row(b);
              for (size_t t = 0; t < dim; ++t) row[t] += scale * grad[t];
            }
          } else {
            auto base = m.input_row(center);
            for (size_t t = 0; t < dim; ++t) base[t] += lr * grad[t];
          }
          trained = true;
        }
        if (trained) {
          tally.loss += center_loss;
          ++tally.centers;
        }
      }
    }
  }
}

TrainResult train_sgns_family(SgnsKind kind, const Corpus& corpus, const Vocabulary& vocab,
                              const TrainingConfig& config, const FastTextConfig* ft,
                              std::ostream* progress) {
  config.validate();
  if (ft) ft->validate();
  if (corpus_token_count(corpus) < 2)
    throw std::runtime_error("corpus has fewer than 2 in-vocabulary tokens");

  SgnsShared sh;
  sh.corpus = &corpus;
  sh.cfg = &config;
  sh.total_tokens = corpus_token_count(corpus);
  sh.table = build_negative_table(vocab, std::max<size_t>(kNegativeTableSize, vocab.size()));
  sh.keep.resize(vocab.size());
  for (size_t i = 0; i < vocab.size(); ++i)
    sh.keep[i] = keep_probability(static_cast<uint32_t>(i), vocab, config.subsample_threshold);

  EmbeddingMatrix matrix =
      init_matrix(vocab.size(), config.dimension, config.seed, ft ? ft->bucket_count : 0);
  if (ft) {
    matrix.word_buckets.resize(vocab.size());
    for (size_t i = 0; i < vocab.size(); ++i) {
      const auto& e = vocab.entry(i);
      if (!e.is_concept) matrix.word_buckets[i] = subword_buckets(e.token, *ft);
    }
  }
  sh.matrix = &matrix;

  TrainLog log;
  for (size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<WorkerTally> tallies(config.workers);
    if (config.workers == 1) {
      sgns_worker(sh, kind, 0, epoch, tallies[0]);
    } else {
      std::vector<std::thread> threads;
      threads.reserve(config.workers);
      for (size_t w = 0; w < config.workers; ++w)
        threads.emplace_back(sgns_worker, std::ref(sh), kind, w, epoch, std::ref(tallies[w]));
      for (auto& t : threads) t.join();
    }
    double loss = 0.0;
    uint64_t centers = 0;
    for (const auto& t : tallies) {
      loss += t.loss;
      centers += t.centers;
    }
    log.center_tokens_processed += centers;
    log.epoch_loss.push_back(centers == 0 ? 0.0 : loss / static_cast<double>(centers));
    matrix.check_finite("epoch");
    if (progress)
      *progress << "epoch " << (epoch + 1) << '/' << config.epochs << " loss "
                << log.epoch_loss.back() << '\n';
  }
  return {std::move(matrix), std::move(log)};
}

}  // namespace

TrainResult train_cbow(const Corpus& corpus, const Vocabulary& vocab,
                       const TrainingConfig& config, std::ostream* progress) {
  if (config.model != ModelType::Cbow)
    throw ConfigError("model", "train_cbow requires model == cbow");
  return train_sgns_family(SgnsKind::Cbow, corpus, vocab, config, nullptr, progress);
}

TrainResult train_skipgram(const Corpus& corpus, const Vocabulary& vocab,
                           const TrainingConfig& config, std::ostream* progress) {
  if (config.model != ModelType::SkipGram)
    throw ConfigError("model", "train_skipgram requires model == skipgram");
  return train_sgns_family(SgnsKind::SkipGram, corpus, vocab, config, nullptr, progress);
}

TrainResult train_fasttext_variant(const Corpus& corpus, const Vocabulary& vocab,
                                   const TrainingConfig& config, const FastTextConfig& ft,
                                   std::ostream* progress) {
  if (config.model != ModelType::FastTextVariant)
    throw ConfigError("model", "train_fasttext_variant requires model == fasttext");
  return train_sgns_family(SgnsKind::FastText, corpus, vocab, config, &ft, progress);
}

Embedding export_embedding(const EmbeddingMatrix& matrix, const Vocabulary& vocab,
                           bool concept_only) {
  if (matrix.rows != vocab.size())
    throw std::invalid_argument("matrix row count does not match vocabulary");
  Embedding e;
  e.dimension = matrix.dimension;
  for (size_t i = 0; i < vocab.size(); ++i) {
    const auto& entry = vocab.entry(i);
    if (concept_only && !entry.is_concept) continue;
    e.tokens.push_back(entry.token);
    std::vector<float> v;
    if (matrix.sum_input_output) {
      auto in = matrix.input_row(i);
      auto out = matrix.output_row(i);
      v.resize(matrix.dimension);
      for (size_t j = 0; j < matrix.dimension; ++j) v[j] = in[j] + out[j];
    } else {
      v = matrix.representation(i);
    }
    e.vectors.insert(e.vectors.end(), v.begin(), v.end());
  }
  if (e.tokens.empty())
    throw std::runtime_error(concept_only ? "no concept tokens to export"
                                          : "nothing to export");
  e.rebuild_index();
  return e;
}

}  // namespace conceptvec
