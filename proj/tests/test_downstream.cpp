#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "conceptvec/downstream.hpp"
#include "testutil.hpp"

using namespace conceptvec;

TEST_CASE("ppi_features concatenates in file order") {
  auto e = testutil::make_embedding({"Gene_A", "Gene_B"}, {{1, 2}, {3, 4}});
  PairInstance ab{"Gene_A", "Gene_B", 1};
  CHECK(ppi_features(ab, e) == std::vector<double>{1, 2, 3, 4});
  PairInstance ba{"Gene_B", "Gene_A", 1};
  CHECK(ppi_features(ba, e) == std::vector<double>{3, 4, 1, 2});  // not symmetrized
  PairInstance missing{"Gene_A", "Gene_X", 0};
  CHECK_THROWS(ppi_features(missing, e));
}

TEST_CASE("load_ppi_file drops and counts instances with unknown tokens") {
  auto e = testutil::make_embedding({"Gene_A", "Gene_B"}, {{1, 2}, {3, 4}});
  std::istringstream in(
      "Gene_A\tGene_B\t1\n"
      "Gene_A\tGene_X\t0\n"
      "Gene_B\tGene_A\t0\n");
  auto data = load_ppi_file(in, e);
  CHECK(data.instances.size() == 2);
  CHECK(data.dropped == 1);

  std::istringstream bad("Gene_A\tGene_B\t7\n");
  CHECK_THROWS(load_ppi_file(bad, e));
}

TEST_CASE("split fractions and determinism") {
  SplitSpec spec;
  spec.validate();  // default 0.63/0.07/0.30 sums to 1
  SplitSpec bad{0.5, 0.2, 0.2, 1};
  CHECK_THROWS(bad.validate());

  auto s1 = split_indices(1000, spec);
  auto s2 = split_indices(1000, spec);
  CHECK(s1.digest() == s2.digest());
  CHECK(s1.train.size() == 630);
  CHECK(s1.validation.size() == 70);
  CHECK(s1.test.size() == 300);

  SplitSpec other = spec;
  other.seed = 2;
  CHECK(split_indices(1000, other).digest() != s1.digest());

  // a permutation: every index appears exactly once
  std::vector<bool> seen(1000, false);
  for (auto part : {&s1.train, &s1.validation, &s1.test})
    for (size_t i : *part) {
      CHECK_FALSE(seen[i]);
      seen[i] = true;
    }
  CHECK(std::count(seen.begin(), seen.end(), true) == 1000);
}

TEST_CASE("evaluate_binary hand cases") {
  // perfectly separated
  auto perfect = evaluate_binary({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0});
  CHECK(perfect.f1 == 1.0);
  REQUIRE(perfect.auc.has_value());
  CHECK(*perfect.auc == 1.0);

  // all scores identical: AUC 0.5 by the tie rule
  auto ties = evaluate_binary({0.5, 0.5, 0.5, 0.5}, {1, 0, 1, 0});
  REQUIRE(ties.auc.has_value());
  CHECK(*ties.auc == 0.5);

  // the 6-instance hand case: AUC = 8/9
  auto hand = evaluate_binary({0.9, 0.8, 0.7, 0.4, 0.3, 0.1}, {1, 1, 0, 1, 0, 0});
  REQUIRE(hand.auc.has_value());
  CHECK(*hand.auc == doctest::Approx(8.0 / 9.0).epsilon(1e-15));
  CHECK(*hand.auc == testutil::brute_force_auc({0.9, 0.8, 0.7, 0.4, 0.3, 0.1},
                                               {1, 1, 0, 1, 0, 0}));

  // single-class labels: AUC undefined, P/R/F1 still returned
  auto single = evaluate_binary({0.9, 0.2}, {1, 1});
  CHECK_FALSE(single.auc.has_value());
  CHECK(single.recall == doctest::Approx(0.5));

  // all predicted negative: 0/0 := 0 conventions
  auto none = evaluate_binary({0.1, 0.2}, {1, 0});
  CHECK(none.precision == 0.0);
  CHECK(none.f1 == 0.0);
}

TEST_CASE("rank AUC equals the brute-force oracle exactly on 50 random datasets") {
  Rng rng(2025);
  for (int iter = 0; iter < 50; ++iter) {
    size_t n = 10 + rng.uniform_u64(1990);  // <= 2000
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    bool any_pos = false, any_neg = false;
    for (size_t i = 0; i < n; ++i) {
      // quantized scores force plenty of ties
      scores[i] = double(rng.uniform_u64(20)) / 20.0;
      labels[i] = rng.uniform() < 0.4 ? 1 : 0;
      (labels[i] ? any_pos : any_neg) = true;
    }
    if (!any_pos) labels[0] = 1;
    if (!any_neg) labels[n - 1] = 0;
    auto m = evaluate_binary(scores, labels);
    REQUIRE(m.auc.has_value());
    CHECK(*m.auc == testutil::brute_force_auc(scores, labels));  // bitwise equal
  }
}

TEST_CASE("sen_features: means, augmentation arity, error cases") {
  auto e = testutil::make_embedding({"Chemical_A", "Chemical_B", "binds", "protein"},
                                    {{1, 0}, {0, 1}, {4, 4}, {-2, 2}});
  DdiInstance inst;
  inst.sentence_tokens = {"Chemical_A", "binds", "Chemical_B"};
  inst.drug_a = "Chemical_A";
  inst.drug_b = "Chemical_B";
  inst.label = DdiLabel::Mechanism;

  auto plain = sen_features(inst, e, false);
  REQUIRE(plain.features.size() == 2);
  CHECK(plain.features[0] == doctest::Approx(5.0 / 3.0));
  CHECK(plain.features[1] == doctest::Approx(5.0 / 3.0));

  auto augmented = sen_features(inst, e, true);
  REQUIRE(augmented.features.size() == 6);
  CHECK(augmented.features[2] == 1.0);  // drug_a vector
  CHECK(augmented.features[5] == 1.0);  // drug_b vector

  // one-token sentence is that token's vector
  DdiInstance one;
  one.sentence_tokens = {"binds"};
  one.drug_a = one.drug_b = "binds";
  auto single = sen_features(one, e, false);
  CHECK(single.features == std::vector<double>{4, 4});

  // (1,0) and (0,1) average to (0.5, 0.5)
  DdiInstance two;
  two.sentence_tokens = {"Chemical_A", "Chemical_B"};
  two.drug_a = "Chemical_A";
  two.drug_b = "Chemical_B";
  CHECK(sen_features(two, e, false).features == std::vector<double>{0.5, 0.5});

  // out-of-vocabulary tokens are skipped and counted
  DdiInstance oov;
  oov.sentence_tokens = {"binds", "mystery"};
  oov.drug_a = oov.drug_b = "binds";
  auto partial = sen_features(oov, e, false);
  CHECK(partial.oov_tokens == 1);
  CHECK(partial.features == std::vector<double>{4, 4});

  DdiInstance all_oov;
  all_oov.sentence_tokens = {"mystery"};
  all_oov.drug_a = all_oov.drug_b = "mystery";
  CHECK_THROWS(sen_features(all_oov, e, false));

  // missing drug vectors become zeros and are counted
  DdiInstance missing_drug;
  missing_drug.sentence_tokens = {"binds", "Chemical_X"};
  missing_drug.drug_a = "Chemical_X";
  missing_drug.drug_b = "binds";
  auto md = sen_features(missing_drug, e, true);
  CHECK(md.missing_drugs == 1);
  CHECK(md.features[2] == 0.0);
  CHECK(md.features[3] == 0.0);
}

TEST_CASE("ddi JSONL loader validates structure") {
  std::istringstream good(
      R"({"tokens":["Chemical_A","binds","Chemical_B"],"drug_a":"Chemical_A","drug_b":"Chemical_B","label":"effect"})"
      "\n");
  auto loaded = load_ddi_file(good);
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].label == DdiLabel::Effect);

  std::istringstream bad_label(
      R"({"tokens":["a","b"],"drug_a":"a","drug_b":"b","label":"bogus"})");
  CHECK_THROWS(load_ddi_file(bad_label));

  std::istringstream drug_absent(
      R"({"tokens":["a","b"],"drug_a":"a","drug_b":"zz","label":"effect"})");
  CHECK_THROWS(load_ddi_file(drug_absent));
}

TEST_CASE("evaluate_ddi hand cases and oracle equality") {
  using L = DdiLabel;
  // all correct
  std::vector<L> gold{L::Mechanism, L::Effect, L::Advice, L::Int, L::Negative};
  auto perfect = evaluate_ddi(gold, gold);
  CHECK(perfect.micro_f1 == 1.0);
  for (size_t t = 0; t < 4; ++t) CHECK(perfect.per_type_f1[t] == 1.0);

  // all predicted negative: recall and F1 are zero
  std::vector<L> all_neg(gold.size(), L::Negative);
  auto none = evaluate_ddi(all_neg, gold);
  CHECK(none.micro_recall == 0.0);
  CHECK(none.micro_f1 == 0.0);

  // 10-instance confusion case equals the confusion-matrix oracle exactly
  std::vector<L> gold10{L::Mechanism, L::Mechanism, L::Effect, L::Effect,  L::Advice,
                        L::Int,       L::Negative,  L::Negative, L::Negative, L::Negative};
  std::vector<L> pred10{L::Mechanism, L::Effect,    L::Effect, L::Negative, L::Advice,
                        L::Advice,    L::Mechanism, L::Negative, L::Negative, L::Effect};
  auto got = evaluate_ddi(pred10, gold10);
  auto oracle = testutil::ddi_confusion_oracle(pred10, gold10);
  CHECK(got.micro_precision == oracle.micro_p);
  CHECK(got.micro_recall == oracle.micro_r);
  CHECK(got.micro_f1 == oracle.micro_f1);
  for (size_t t = 0; t < 4; ++t) CHECK(got.per_type_f1[t] == oracle.per_type_f1[t]);

  // negative-negative agreement never enters the micro counts: flipping
  // correct positives is visible, shuffling negatives among negatives is not
  std::vector<L> gold_n{L::Mechanism, L::Negative, L::Negative, L::Negative};
  std::vector<L> pred_a{L::Mechanism, L::Negative, L::Negative, L::Negative};
  std::vector<L> pred_b{L::Mechanism, L::Negative, L::Negative, L::Negative};
  CHECK(evaluate_ddi(pred_a, gold_n).micro_f1 == evaluate_ddi(pred_b, gold_n).micro_f1);
  CHECK(evaluate_ddi(pred_a, gold_n).micro_f1 == 1.0);
}

namespace {

struct PlantedPpi {
  PpiData data;
  Embedding embedding;
};

// positives are same-cluster pairs (cosine above the cluster threshold)
PlantedPpi make_planted_ppi(size_t n_pairs, uint64_t seed) {
  PlantedPpi out;
  std::vector<size_t> cluster_of;
  out.embedding = testutil::make_clustered_embedding(12, 25, 16, 0.18, seed, &cluster_of);
  Rng rng(seed + 1);
  const size_t n = out.embedding.size();
  while (out.data.instances.size() < n_pairs) {
    size_t a = rng.uniform_u64(n), b = rng.uniform_u64(n);
    if (a == b) continue;
    bool same = cluster_of[a] == cluster_of[b];
    // balance the classes
    size_t positives = 0;
    for (const auto& inst : out.data.instances) positives += size_t(inst.label);
    if (same && positives * 2 >= out.data.instances.size() + 1) continue;
    if (!same && (out.data.instances.size() - positives) * 2 >= out.data.instances.size() + 1)
      continue;
    out.data.instances.push_back(
        {out.embedding.tokens[a], out.embedding.tokens[b], same ? 1 : 0});
  }
  return out;
}

}  // namespace

TEST_CASE("run_ppi recovers the planted rule and fails on shuffled labels") {
  auto planted = make_planted_ppi(3000, 99);

  SplitSpec split;
  split.seed = 7;
  TrainHyper hyper;
  hyper.hidden = {64, 32};
  hyper.batch = 64;
  hyper.learning_rate = 0.05;
  hyper.max_epochs = 40;
  hyper.patience = 5;
  hyper.seed = 7;

  auto report = run_ppi(planted.data, planted.embedding, split, hyper);
  REQUIRE(report.metrics.auc.has_value());
  CHECK(*report.metrics.auc >= 0.95);

  // label-shuffled control sits at chance level
  auto shuffled = planted.data;
  Rng rng(5);
  std::vector<int> labels;
  for (const auto& inst : shuffled.instances) labels.push_back(inst.label);
  shuffle(labels, rng);
  for (size_t i = 0; i < labels.size(); ++i) shuffled.instances[i].label = labels[i];
  auto null_report = run_ppi(shuffled, planted.embedding, split, hyper);
  REQUIRE(null_report.metrics.auc.has_value());
  CHECK(*null_report.metrics.auc > 0.45);
  CHECK(*null_report.metrics.auc < 0.55);
}

TEST_CASE("embedding swap: identical split and init digests for the same seed") {
  auto planted = make_planted_ppi(400, 17);
  auto other = testutil::make_random_embedding(planted.embedding.tokens, 16, 555);

  SplitSpec split;
  split.seed = 3;
  TrainHyper hyper;
  hyper.hidden = {8, 4};
  hyper.max_epochs = 2;
  hyper.seed = 3;

  auto r1 = run_ppi(planted.data, planted.embedding, split, hyper);
  auto r2 = run_ppi(planted.data, other, split, hyper);
  CHECK(r1.split_digest == r2.split_digest);
  CHECK(r1.init_digest == r2.init_digest);

  TrainHyper hyper2 = hyper;
  hyper2.seed = 4;
  auto r3 = run_ppi(planted.data, planted.embedding, split, hyper2);
  CHECK(r3.init_digest != r1.init_digest);
}

namespace {

struct PlantedDdi {
  std::vector<DdiInstance> train, test;
  Embedding embedding;
};

// the relation type is a deterministic function of a planted keyword token
PlantedDdi make_planted_ddi(size_t n_train, size_t n_test, uint64_t seed) {
  PlantedDdi out;
  std::vector<std::string> tokens = {"Chemical_D1", "Chemical_D2", "kw_mechanism", "kw_effect",
                                     "kw_advice",   "kw_int"};
  for (int i = 0; i < 30; ++i) tokens.push_back("filler" + std::to_string(i));
  out.embedding = testutil::make_random_embedding(tokens, 12, seed);
  // keyword vectors dominate the sentence mean so the rule is recoverable
  for (const char* kw : {"kw_mechanism", "kw_effect", "kw_advice", "kw_int"}) {
    auto row = out.embedding.row(*out.embedding.find(kw));
    for (float& v : row) v *= 4.0f;
  }

  Rng rng(seed + 9);
  auto make = [&](size_t n, std::vector<DdiInstance>& dest) {
    for (size_t i = 0; i < n; ++i) {
      DdiInstance inst;
      inst.drug_a = "Chemical_D1";
      inst.drug_b = "Chemical_D2";
      inst.sentence_tokens = {"Chemical_D1", "Chemical_D2"};
      for (int f = 0; f < 3; ++f)
        inst.sentence_tokens.push_back("filler" + std::to_string(rng.uniform_u64(30)));
      size_t cls = rng.uniform_u64(5);
      inst.label = static_cast<DdiLabel>(cls);
      if (cls < 4) {
        static const char* kw[] = {"kw_mechanism", "kw_effect", "kw_advice", "kw_int"};
        inst.sentence_tokens.push_back(kw[cls]);
      }
      shuffle(inst.sentence_tokens, rng);
      dest.push_back(std::move(inst));
    }
  };
  make(n_train, out.train);
  make(n_test, out.test);
  return out;
}

}  // namespace

TEST_CASE("run_ddi learns the planted keyword rule over 5 seeds") {
  auto planted = make_planted_ddi(1500, 400, 212);
  TrainHyper hyper;
  hyper.hidden = {64, 32};
  hyper.batch = 32;
  hyper.learning_rate = 0.1;
  hyper.max_epochs = 150;
  hyper.patience = 20;

  auto report = run_ddi(planted.train, planted.test, planted.embedding, hyper,
                        {1, 2, 3, 4, 5});
  REQUIRE(report.runs.size() == 5);
  CHECK(report.mean.micro_f1 >= 0.95);

  // identical seeds: zero variance
  auto same = run_ddi(planted.train, planted.test, planted.embedding, hyper, {9, 9, 9});
  for (const auto& run : same.runs) {
    CHECK(run.metrics.micro_f1 == same.runs[0].metrics.micro_f1);
    CHECK(run.split_digest == same.runs[0].split_digest);
    CHECK(run.init_digest == same.runs[0].init_digest);
  }

  // embedding swap keeps the protocol digests
  auto other = testutil::make_random_embedding(planted.embedding.tokens, 12, 777);
  auto r2 = run_ddi(planted.train, planted.test, other, hyper, {9});
  CHECK(r2.runs[0].split_digest == same.runs[0].split_digest);
  CHECK(r2.runs[0].init_digest == same.runs[0].init_digest);
}
