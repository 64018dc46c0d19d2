#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "conceptvec/vocab.hpp"

using namespace conceptvec;

namespace {

Vocabulary vocab_of(const std::string& corpus, int64_t min_count) {
  std::istringstream in(corpus);
  return Vocabulary::build_from_stream(in, min_count);
}

}  // namespace

TEST_CASE("build_vocab min_count threshold and ordering") {
  auto v1 = vocab_of("a a a b", 2);
  CHECK(v1.size() == 1);
  CHECK(v1.entry(0).token == "a");
  CHECK(v1.entry(0).count == 3);
  CHECK_FALSE(v1.find("b").has_value());

  auto v2 = vocab_of("a a a b", 1);
  REQUIRE(v2.size() == 2);
  CHECK(v2.entry(0).token == "a");
  CHECK(v2.entry(1).token == "b");
  CHECK(v2.total_tokens() == 4);

  // count ties order alphabetically
  auto v3 = vocab_of("z y z y x", 1);
  CHECK(v3.entry(0).token == "y");
  CHECK(v3.entry(1).token == "z");
  CHECK(v3.entry(2).token == "x");
}

TEST_CASE("build_vocab flags concept tokens and rejects empty results") {
  auto v = vocab_of("Gene_2099 Gene_2099 tumor tumor tumor", 2);
  CHECK(v.find("Gene_2099").has_value());
  CHECK(v.entry(*v.find("Gene_2099")).is_concept);
  CHECK_FALSE(v.entry(*v.find("tumor")).is_concept);

  CHECK_THROWS(vocab_of("a b c", 5));
}

TEST_CASE("vocabulary save/load round trip is byte-identical") {
  auto v = vocab_of("Gene_1 Gene_1 Gene_1 alpha alpha beta", 1);
  std::ostringstream out1;
  v.save(out1);
  std::istringstream in(out1.str());
  auto v2 = Vocabulary::load(in);
  std::ostringstream out2;
  v2.save(out2);
  CHECK(out1.str() == out2.str());
  CHECK(v2.total_tokens() == v.total_tokens());
  CHECK(v2.entry(*v2.find("Gene_1")).is_concept);
}

TEST_CASE("keep_probability boundary points") {
  // total 1000; counts chosen so f hits the three boundary cases exactly
  std::string corpus;
  for (int i = 0; i < 1; ++i) corpus += "t1 ";           // f = 0.001
  for (int i = 0; i < 4; ++i) corpus += "t4 ";           // f = 0.004
  for (int i = 0; i < 995; ++i) corpus += "filler ";     // pad to total 1000
  auto v = vocab_of(corpus, 1);
  REQUIRE(v.total_tokens() == 1000);

  const double threshold = 0.001;
  CHECK(keep_probability("t1", v, threshold) == doctest::Approx(1.0).epsilon(1e-12));  // f == t
  CHECK(keep_probability("t4", v, threshold) == doctest::Approx(0.5).epsilon(1e-12));  // f == 4t
  // f == t/4 clamps to 1: use threshold 4x the frequency of t1
  CHECK(keep_probability("t1", v, 0.004) == 1.0);
  CHECK_THROWS(keep_probability("absent", v, threshold));
}

TEST_CASE("negative table: single token and ratio convergence") {
  auto v1 = vocab_of("only only", 1);
  auto t1 = build_negative_table(v1, 100);
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) CHECK(t1.draw(rng) == 0);

  // counts 16 : 1 -> draw ratio 16^0.75 : 1 = 8 : 1
  std::string corpus;
  for (int i = 0; i < 16; ++i) corpus += "big ";
  corpus += "small";
  auto v2 = vocab_of(corpus, 1);
  auto t2 = build_negative_table(v2, 1'000'000);

  const size_t draws = 1'000'000;
  size_t counts[2] = {0, 0};
  Rng rng2(99);
  for (size_t i = 0; i < draws; ++i) ++counts[t2.draw(rng2)];

  const double p_big = 8.0 / 9.0, p_small = 1.0 / 9.0;
  double f_big = double(counts[0]) / double(draws);
  double f_small = double(counts[1]) / double(draws);
  CHECK(std::abs(f_big - p_big) / p_big < 0.05);
  CHECK(std::abs(f_small - p_small) / p_small < 0.05);
  // and within 3 sigma of the multinomial expectation
  CHECK(std::abs(f_big - p_big) < 3.0 * std::sqrt(p_big * (1 - p_big) / double(draws)));
  CHECK(std::abs(f_small - p_small) < 3.0 * std::sqrt(p_small * (1 - p_small) / double(draws)));
}

TEST_CASE("negative table: uniform counts give uniform draws") {
  auto v = vocab_of("a b c d", 1);
  auto t = build_negative_table(v, 1'000'000);
  size_t counts[4] = {};
  Rng rng(7);
  const size_t draws = 1'000'000;
  for (size_t i = 0; i < draws; ++i) ++counts[t.draw(rng)];
  for (size_t i = 0; i < 4; ++i) {
    double f = double(counts[i]) / double(draws);
    CHECK(std::abs(f - 0.25) / 0.25 < 0.05);
  }
  CHECK_THROWS(build_negative_table(v, 2));  // size below |vocab|
}

TEST_CASE("negative table draws are seed-reproducible") {
  auto v = vocab_of("a a a b b c", 1);
  auto t = build_negative_table(v, 1000);
  Rng r1(5), r2(5);
  for (int i = 0; i < 100; ++i) CHECK(t.draw(r1) == t.draw(r2));
}

TEST_CASE("subsampling Monte Carlo expectation") {
  // token with f = 0.1 > threshold 0.001: expected retained count per epoch
  // is count * sqrt(t/f); check the empirical mean within 3 standard errors.
  std::string corpus;
  for (int i = 0; i < 100; ++i) corpus += "hot ";
  for (int i = 0; i < 900; ++i) corpus += "w" + std::to_string(i) + " ";
  auto v = vocab_of(corpus, 1);
  const double threshold = 0.001;
  const double p = keep_probability("hot", v, threshold);
  CHECK(p == doctest::Approx(std::sqrt(threshold / 0.1)));

  const int epochs = 400;
  const int count = 100;
  Rng rng(13);
  double retained = 0;
  for (int e = 0; e < epochs; ++e)
    for (int i = 0; i < count; ++i)
      if (rng.uniform() < p) retained += 1.0;
  double mean = retained / epochs;
  double expected = count * p;
  double se = std::sqrt(count * p * (1 - p) / epochs);
  CHECK(std::abs(mean - expected) < 3.0 * se);
}
