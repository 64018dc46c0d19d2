#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "conceptvec/glove.hpp"
#include "testutil.hpp"

using namespace conceptvec;

namespace {

Corpus corpus_from(const std::vector<std::string>& lines, Vocabulary& vocab_out) {
  std::string all;
  for (const auto& l : lines) all += l + "\n";
  std::istringstream vin(all);
  vocab_out = Vocabulary::build_from_stream(vin, 1);
  std::istringstream cin_(all);
  return load_corpus_ids(cin_, vocab_out);
}

}  // namespace

TEST_CASE("glove_weight boundary values") {
  GloveConfig cfg;  // x_max 100, alpha 0.75
  CHECK(glove_weight(cfg.x_max, cfg) == 1.0);
  CHECK(glove_weight(2 * cfg.x_max, cfg) == 1.0);
  CHECK(glove_weight(cfg.x_max / 16.0, cfg) == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(glove_weight(cfg.x_max / 2.0, cfg) ==
        doctest::Approx(std::pow(0.5, 0.75)).epsilon(1e-12));
}

TEST_CASE("co-occurrence hand counts") {
  Vocabulary vocab;

  // adjacent pair, d = 1
  auto c1 = corpus_from({"a b"}, vocab);
  auto m1 = build_cooccurrence(c1, 5);
  auto a = *vocab.find("a");
  auto b = *vocab.find("b");
  CHECK(m1.at(a, b) == 1.0);
  CHECK(m1.at(b, a) == 1.0);  // symmetric by construction

  // distance-2 pair weighted 1/2
  Vocabulary vocab2;
  auto c2 = corpus_from({"a x b"}, vocab2);
  auto m2 = build_cooccurrence(c2, 5);
  CHECK(m2.at(*vocab2.find("a"), *vocab2.find("b")) == 0.5);
  CHECK(m2.at(*vocab2.find("a"), *vocab2.find("x")) == 1.0);
  CHECK(m2.at(*vocab2.find("x"), *vocab2.find("b")) == 1.0);

  // document boundaries reset the scan: ten one-line copies of "a b"
  Vocabulary vocab3;
  std::vector<std::string> lines(10, "a b");
  auto c3 = corpus_from(lines, vocab3);
  auto m3 = build_cooccurrence(c3, 1);
  CHECK(m3.at(*vocab3.find("a"), *vocab3.find("b")) == 10.0);
  CHECK(m3.at(*vocab3.find("a"), *vocab3.find("a")) == 0.0);  // no cross-line pairs

  // window truncates distances
  Vocabulary vocab4;
  auto c4 = corpus_from({"a x y b"}, vocab4);
  auto m4 = build_cooccurrence(c4, 2);
  CHECK(m4.at(*vocab4.find("a"), *vocab4.find("b")) == 0.0);  // d = 3 > window
  CHECK(m4.at(*vocab4.find("a"), *vocab4.find("y")) == 0.5);
}

TEST_CASE("co-occurrence symmetry on a random corpus") {
  auto corpus = testutil::make_cluster_corpus(2, 5, 2000, 40, 3);
  Vocabulary vocab;
  auto c = corpus_from(corpus.lines, vocab);
  auto m = build_cooccurrence(c, 4);
  CHECK_FALSE(m.empty());
  for (const auto& [key, w] : m.cells) {
    CHECK(w > 0);
    CHECK(m.at(key.first, key.second) == m.at(key.second, key.first));
  }
}

TEST_CASE("glove pair gradients match central finite differences") {
  Rng rng(404);
  GloveConfig gcfg;
  gcfg.x_max = 10;
  for (int iter = 0; iter < 60; ++iter) {
    const size_t dim = 2 + rng.uniform_u64(6);
    std::vector<double> wi(dim), wj(dim);
    for (auto& x : wi) x = rng.uniform(-1, 1);
    for (auto& x : wj) x = rng.uniform(-1, 1);
    double bi = rng.uniform(-1, 1), bj = rng.uniform(-1, 1);
    double x = rng.uniform(0.1, 30.0);

    std::vector<double> gwi(dim, 0), gwj(dim, 0);
    double gbi = 0, gbj = 0;
    glove_pair_loss_grad<double>(wi, wj, bi, bj, x, gcfg, gwi, gwj, gbi, gbj);

    auto loss = [&]() {
      double dot = 0;
      for (size_t t = 0; t < dim; ++t) dot += wi[t] * wj[t];
      double diff = dot + bi + bj - std::log(x);
      return glove_weight(x, gcfg) * diff * diff;
    };
    const double h = 1e-6;
    auto check = [&](double& coord, double analytic) {
      double fd = testutil::central_difference(loss, coord, h);
      CHECK(std::abs(analytic - fd) / std::max(1e-8, std::abs(fd)) < 1e-5);
    };
    for (size_t t = 0; t < dim; ++t) check(wi[t], gwi[t]);
    for (size_t t = 0; t < dim; ++t) check(wj[t], gwj[t]);
    check(bi, gbi);
    check(bj, gbj);
  }
}

TEST_CASE("glove training: loss non-increasing over 50 epochs on a fixed matrix") {
  // fixed 10-token co-occurrence structure
  CoocMatrix cooc;
  for (uint32_t i = 0; i < 10; ++i)
    for (uint32_t j = 0; j <= i; ++j)
      if ((i + j) % 3 != 0 || i == j) cooc.add(i, j, 1.0 + double((i * 7 + j * 3) % 13));

  TrainingConfig cfg;
  cfg.model = ModelType::Glove;
  cfg.dimension = 6;
  cfg.epochs = 50;
  cfg.seed = 15;
  GloveConfig gcfg;
  gcfg.x_max = 10;
  gcfg.initial_step = 0.01;  // small fixed step

  auto result = train_glove(cooc, 10, cfg, gcfg);
  REQUIRE(result.log.epoch_loss.size() == 50);
  for (size_t e = 1; e < result.log.epoch_loss.size(); ++e)
    CHECK(result.log.epoch_loss[e] <= result.log.epoch_loss[e - 1] + 1e-9);
  CHECK(result.log.epoch_loss.back() < result.log.epoch_loss.front());
}

TEST_CASE("glove export sums input and output rows") {
  CoocMatrix cooc;
  cooc.add(0, 1, 5.0);
  cooc.add(1, 2, 2.0);
  cooc.add(0, 2, 1.0);
  TrainingConfig cfg;
  cfg.model = ModelType::Glove;
  cfg.dimension = 4;
  cfg.epochs = 3;
  auto result = train_glove(cooc, 3, cfg, GloveConfig{});
  CHECK(result.matrix.sum_input_output);

  std::istringstream vin("t0 t0 t0 t1 t1 t2");
  auto vocab = Vocabulary::build_from_stream(vin, 1);
  auto e = export_embedding(result.matrix, vocab, false);
  for (size_t i = 0; i < 3; ++i) {
    auto w = result.matrix.input_row(i);
    auto wt = result.matrix.output_row(i);
    auto row = e.row(i);
    for (size_t t = 0; t < 4; ++t) CHECK(row[t] == w[t] + wt[t]);
  }
}

TEST_CASE("glove rejects empty matrices and flags bad config") {
  CoocMatrix empty;
  TrainingConfig cfg;
  cfg.model = ModelType::Glove;
  CHECK_THROWS(train_glove(empty, 3, cfg, GloveConfig{}));
  GloveConfig bad;
  bad.x_max = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  GloveConfig bad2;
  bad2.weight_alpha = 1.5;
  CHECK_THROWS_AS(bad2.validate(), ConfigError);
}

TEST_CASE("glove separates the two-cluster corpus") {
  auto corpus = testutil::make_cluster_corpus(2, 5, 20000, 100, 55);
  Vocabulary vocab;
  auto c = corpus_from(corpus.lines, vocab);
  auto cooc = build_cooccurrence(c, 5);
  TrainingConfig cfg;
  cfg.model = ModelType::Glove;
  cfg.dimension = 16;
  cfg.epochs = 15;
  cfg.seed = 2;
  GloveConfig gcfg;
  auto result = train_glove(cooc, vocab.size(), cfg, gcfg);
  auto emb = export_embedding(result.matrix, vocab, false);
  CHECK(testutil::cluster_margin(emb, corpus.clusters) > 0.3);
}
