#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "conceptvec/corpus.hpp"
#include "conceptvec/trainers.hpp"
#include "testutil.hpp"

using namespace conceptvec;

namespace {

struct Prepared {
  Vocabulary vocab;
  Corpus corpus;
};

Prepared prepare(const std::vector<std::string>& lines, int64_t min_count = 1) {
  std::string all;
  for (const auto& l : lines) all += l + "\n";
  std::istringstream vin(all);
  auto vocab = Vocabulary::build_from_stream(vin, min_count);
  std::istringstream cin_(all);
  auto corpus = load_corpus_ids(cin_, vocab);
  return {std::move(vocab), std::move(corpus)};
}

// test-local loss for the finite-difference oracle
double sgns_loss(const std::vector<double>& u, const std::vector<double>& pos,
                 const std::vector<std::vector<double>>& negs) {
  auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  };
  auto log_sig = [](double x) {
    return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
  };
  double loss = -log_sig(dot(u, pos));
  for (const auto& n : negs) loss -= log_sig(-dot(u, n));
  return loss;
}

}  // namespace

TEST_CASE("config validation names the field") {
  TrainingConfig cfg;
  cfg.window = 0;
  try {
    cfg.validate();
    FAIL_CHECK("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "window");
  }
  cfg = TrainingConfig{};
  cfg.epochs = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TrainingConfig{};
  CHECK_NOTHROW(cfg.validate());
  // paper-default column
  CHECK(cfg.dimension == 200);
  CHECK(cfg.window == 20);
  CHECK(cfg.negatives == 5);
  CHECK(cfg.subsample_threshold == 1e-3);
  CHECK(cfg.min_count == 5);
  CHECK(cfg.learning_rate == 0.025);
  CHECK(cfg.epochs == 10);
  FastTextConfig ft;
  CHECK(ft.min_ngram == 2);
  CHECK(ft.max_ngram == 3);
  CHECK(ft.bucket_count == 2'000'000);
}

TEST_CASE("sgns_step analytic cases") {
  // zero vectors: sigma(0) = 0.5, so u moves by +0.5*lr*v+ and v+ by 0.5*lr*u(=0)
  std::vector<double> u{0, 0}, pos{1, 2}, neg{3, 4};
  std::vector<std::span<double>> negs{std::span<double>(neg)};
  double lr = 0.1;
  double loss = sgns_step<double>(u, pos, std::span<const std::span<double>>(negs), lr);
  CHECK(u[0] == doctest::Approx(0.5 * lr * 1 - 0.5 * lr * 3).epsilon(1e-12));
  CHECK(u[1] == doctest::Approx(0.5 * lr * 2 - 0.5 * lr * 4).epsilon(1e-12));
  CHECK(pos[0] == 1.0);  // u was zero, so output rows do not move
  CHECK(neg[1] == 4.0);
  CHECK(loss == doctest::Approx(-2.0 * std::log(0.5)).epsilon(1e-12));

  // saturated case: near-zero loss and near-zero updates
  std::vector<double> us{100, 0}, poss{1, 0}, negs_v{-1, 0};
  std::vector<std::span<double>> negs2{std::span<double>(negs_v)};
  double sat_loss = sgns_step<double>(us, poss, std::span<const std::span<double>>(negs2), 0.5);
  CHECK(sat_loss < 1e-20);
  CHECK(us[0] == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(poss[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sgns_step matches central finite differences on 100 random instances") {
  Rng rng(2024);
  int checked = 0;
  for (int iter = 0; iter < 100; ++iter) {
    const size_t dim = 2 + rng.uniform_u64(7);  // <= 8
    const size_t k = 1 + rng.uniform_u64(4);
    std::vector<double> u(dim), pos(dim);
    std::vector<std::vector<double>> negs(k, std::vector<double>(dim));
    for (auto& x : u) x = rng.uniform(-1.5, 1.5);
    for (auto& x : pos) x = rng.uniform(-1.5, 1.5);
    for (auto& n : negs)
      for (auto& x : n) x = rng.uniform(-1.5, 1.5);

    // analytic update via sgns_step on copies
    const double lr = 0.25;
    auto u2 = u;
    auto pos2 = pos;
    auto negs2 = negs;
    std::vector<std::span<double>> neg_spans;
    for (auto& n : negs2) neg_spans.emplace_back(n);
    sgns_step<double>(u2, pos2, std::span<const std::span<double>>(neg_spans), lr);

    // finite differences of the stated loss; update must equal -lr * dL/dx
    auto params = [&]() { return sgns_loss(u, pos, negs); };
    const double h = 1e-5;
    auto check_coord = [&](double& coord, double updated) {
      double fd = testutil::central_difference(params, coord, h);
      double analytic = (updated - coord) / lr;  // the applied ascent step
      double denom = std::max(1e-8, std::abs(fd));
      CHECK(std::abs(analytic - (-fd)) / denom < 1e-5);
      ++checked;
    };
    for (size_t j = 0; j < dim; ++j) check_coord(u[j], u2[j]);
    for (size_t j = 0; j < dim; ++j) check_coord(pos[j], pos2[j]);
    for (size_t n = 0; n < k; ++n)
      for (size_t j = 0; j < dim; ++j) check_coord(negs[n][j], negs2[n][j]);
  }
  CHECK(checked > 1000);
}

TEST_CASE("trainers reject corpora that are too small") {
  auto p = prepare({"solo"});
  TrainingConfig cfg;
  cfg.model = ModelType::Cbow;
  cfg.dimension = 4;
  CHECK_THROWS(train_cbow(p.corpus, p.vocab, cfg));
}

TEST_CASE("single-worker determinism: identical matrices across runs") {
  auto corpus = testutil::make_cluster_corpus(2, 5, 4000, 40, 11);
  auto p = prepare(corpus.lines);
  TrainingConfig cfg;
  cfg.model = ModelType::SkipGram;
  cfg.dimension = 8;
  cfg.window = 3;
  cfg.epochs = 2;
  cfg.seed = 5;
  cfg.workers = 1;
  auto r1 = train_skipgram(p.corpus, p.vocab, cfg);
  auto r2 = train_skipgram(p.corpus, p.vocab, cfg);
  CHECK(r1.matrix.input == r2.matrix.input);
  CHECK(r1.matrix.output == r2.matrix.output);
  CHECK(r1.log.epoch_loss == r2.log.epoch_loss);
}

TEST_CASE("skip-gram on an alternating pair corpus raises cosine epoch over epoch") {
  // window 1, corpus "a b a b ...": cosine(input a, output b) should climb
  std::vector<std::string> lines;
  std::string line;
  for (int i = 0; i < 400; ++i) line += i % 2 ? "b " : "a ";
  lines.push_back(line);
  auto p = prepare(lines);

  TrainingConfig cfg;
  cfg.model = ModelType::SkipGram;
  cfg.dimension = 8;
  cfg.window = 1;
  cfg.negatives = 2;
  cfg.epochs = 1;
  cfg.seed = 3;
  cfg.subsample_threshold = 1e9;  // disable subsampling for this check

  auto a = *p.vocab.find("a");
  auto b = *p.vocab.find("b");
  double prev = -2.0;
  for (size_t epochs = 1; epochs <= 5; ++epochs) {
    cfg.epochs = epochs;
    auto r = train_skipgram(p.corpus, p.vocab, cfg);
    double cur = cosine(r.matrix.input_row(a), r.matrix.output_row(b));
    CHECK(cur > prev - 0.02);  // monotone in expectation, small slack
    prev = cur;
  }
  CHECK(prev > 0.5);
}

TEST_CASE("cbow and skip-gram separate the two-cluster corpus at small scale") {
  auto corpus = testutil::make_cluster_corpus(2, 5, 20000, 100, 123);
  auto p = prepare(corpus.lines);
  TrainingConfig cfg;
  cfg.dimension = 16;
  cfg.window = 5;
  cfg.negatives = 5;
  cfg.epochs = 5;
  cfg.seed = 9;
  cfg.subsample_threshold = 1e-3;

  cfg.model = ModelType::Cbow;
  auto cbow = train_cbow(p.corpus, p.vocab, cfg);
  auto cbow_emb = export_embedding(cbow.matrix, p.vocab, false);
  CHECK(testutil::cluster_margin(cbow_emb, corpus.clusters) > 0.3);

  cfg.model = ModelType::SkipGram;
  auto sg = train_skipgram(p.corpus, p.vocab, cfg);
  auto sg_emb = export_embedding(sg.matrix, p.vocab, false);
  CHECK(testutil::cluster_margin(sg_emb, corpus.clusters) > 0.3);
}

TEST_CASE("char n-grams of 'er' with min 2 max 3") {
  auto grams = char_ngrams("er", 2, 3);
  std::multiset<std::string> got(grams.begin(), grams.end());
  std::multiset<std::string> expected{"<e", "er", "r>", "<er", "er>"};
  CHECK(got == expected);
}

TEST_CASE("subword buckets are deterministic and bounded") {
  FastTextConfig ft;
  ft.bucket_count = 1000;
  auto b1 = subword_buckets("kinase", ft);
  auto b2 = subword_buckets("kinase", ft);
  CHECK(b1 == b2);
  CHECK_FALSE(b1.empty());
  for (auto b : b1) CHECK(b < 1000);
}

TEST_CASE("fastText variant suppresses concept n-grams") {
  // corpus mixing words and concept tokens
  std::vector<std::string> lines;
  for (int i = 0; i < 300; ++i)
    lines.push_back("Gene_2099 binds er receptor Chemical_MESH_C539933 pathway");
  auto p = prepare(lines);

  TrainingConfig cfg;
  cfg.model = ModelType::FastTextVariant;
  cfg.dimension = 8;
  cfg.window = 3;
  cfg.epochs = 2;
  cfg.seed = 21;
  FastTextConfig ft;
  ft.bucket_count = 5000;

  auto result = train_fasttext_variant(p.corpus, p.vocab, cfg, ft);
  const auto& m = result.matrix;

  // concept representation == its token row exactly, before and after training
  auto gi = *p.vocab.find("Gene_2099");
  auto rep = m.representation(gi);
  auto row = m.input_row(gi);
  CHECK(std::equal(rep.begin(), rep.end(), row.begin(), row.end()));
  CHECK(m.word_buckets[gi].empty());

  // a non-concept word has buckets and a composed representation
  auto wi = *p.vocab.find("receptor");
  CHECK_FALSE(m.word_buckets[wi].empty());

  // buckets never touched by any word stay at their seeded initial values
  auto init = init_matrix(p.vocab.size(), cfg.dimension, cfg.seed, ft.bucket_count);
  std::set<uint32_t> used;
  for (const auto& bs : m.word_buckets) used.insert(bs.begin(), bs.end());
  size_t untouched_checked = 0;
  for (uint32_t b = 0; b < ft.bucket_count && untouched_checked < 500; ++b) {
    if (used.contains(b)) continue;
    auto got = m.subword_row(b);
    auto want = init.subword_row(b);
    CHECK(std::equal(got.begin(), got.end(), want.begin(), want.end()));
    ++untouched_checked;
  }
  CHECK(untouched_checked > 0);
}

TEST_CASE("export_embedding filters concepts and survives a save/load trip") {
  std::vector<std::string> lines;
  for (int i = 0; i < 200; ++i) lines.push_back("Gene_1 Gene_2 Gene_3 alpha beta gamma delta");
  auto p = prepare(lines);
  TrainingConfig cfg;
  cfg.model = ModelType::Cbow;
  cfg.dimension = 6;
  cfg.window = 3;
  cfg.epochs = 1;
  auto r = train_cbow(p.corpus, p.vocab, cfg);

  auto full = export_embedding(r.matrix, p.vocab, false);
  CHECK(full.size() == p.vocab.size());
  auto concepts = export_embedding(r.matrix, p.vocab, true);
  CHECK(concepts.size() == 3);
  for (const auto& t : concepts.tokens) CHECK(is_concept_token(t));

  std::ostringstream out;
  save_text(concepts, out);
  std::istringstream in(out.str());
  auto loaded = load_text(in);
  for (size_t i = 0; i < loaded.vectors.size(); ++i) {
    double rel = std::abs(loaded.vectors[i] - concepts.vectors[i]);
    CHECK(rel < 1e-5);
  }
}

TEST_CASE("no NaN after training and learning-rate floor is respected") {
  auto corpus = testutil::make_cluster_corpus(2, 5, 2000, 50, 77);
  auto p = prepare(corpus.lines);
  TrainingConfig cfg;
  cfg.model = ModelType::Cbow;
  cfg.dimension = 8;
  cfg.window = 4;
  cfg.epochs = 3;
  cfg.learning_rate = 0.05;
  auto r = train_cbow(p.corpus, p.vocab, cfg);
  CHECK_NOTHROW(r.matrix.check_finite("test"));
  CHECK(r.log.epoch_loss.size() == 3);
  for (double l : r.log.epoch_loss) CHECK(std::isfinite(l));
}
