#include "conceptvec/downstream.hpp"

#include <algorithm>
#include <cmath>
#include <istream>

#include <json.hpp>

#include "conceptvec/rng.hpp"
#include "conceptvec/util.hpp"

namespace conceptvec {

PpiData load_ppi_file(std::istream& in, const Embedding& embedding) {
  PpiData data;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split(line, '\t');
    if (fields.size() != 3)
      throw std::runtime_error("pair file line " + std::to_string(line_no) +
                               ": expected 'token_a<TAB>token_b<TAB>label'");
    std::string_view label = trim(fields[2]);
    if (label != "0" && label != "1")
      throw std::runtime_error("pair file line " + std::to_string(line_no) +
                               ": label must be 0 or 1");
    PairInstance inst{std::string(fields[0]), std::string(fields[1]), label == "1" ? 1 : 0};
    if (!embedding.find(inst.token_a) || !embedding.find(inst.token_b)) {
      ++data.dropped;
      continue;
    }
    data.instances.push_back(std::move(inst));
  }
  return data;
}

std::vector<double> ppi_features(const PairInstance& pair, const Embedding& embedding) {
  auto a = embedding.find(pair.token_a);
  auto b = embedding.find(pair.token_b);
  if (!a || !b)
    throw std::runtime_error("pair token missing from embedding: " +
                             (a ? pair.token_b : pair.token_a));
  std::vector<double> features;
  features.reserve(2 * embedding.dimension);
  for (float v : embedding.row(*a)) features.push_back(static_cast<double>(v));
  for (float v : embedding.row(*b)) features.push_back(static_cast<double>(v));
  return features;
}

void SplitSpec::validate() const {
  if (train < 0 || validation < 0 || test < 0 ||
      std::abs(train + validation + test - 1.0) > 1e-9)
    throw std::invalid_argument("split fractions must be non-negative and sum to 1");
}

uint64_t SplitIndices::digest() const {
  uint64_t h = kFnvOffset;
  auto mix = [&h](const std::vector<size_t>& v) {
    uint64_t n = v.size();
    h = fnv1a64(&n, sizeof(n), h);
    for (size_t i : v) {
      uint64_t x = i;
      h = fnv1a64(&x, sizeof(x), h);
    }
  };
  mix(train);
  mix(validation);
  mix(test);
  return h;
}

SplitIndices split_indices(size_t n, const SplitSpec& spec) {
  spec.validate();
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(Rng::derive(spec.seed, 0x5714));
  shuffle(order, rng);
  SplitIndices out;
  size_t n_train = static_cast<size_t>(std::floor(spec.train * static_cast<double>(n)));
  size_t n_val = static_cast<size_t>(std::floor(spec.validation * static_cast<double>(n)));
  out.train.assign(order.begin(), order.begin() + n_train);
  out.validation.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  out.test.assign(order.begin() + n_train + n_val, order.end());
  return out;
}

BinaryMetrics evaluate_binary(const std::vector<double>& scores, const std::vector<int>& labels,
                              double threshold) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("evaluate_binary: size mismatch");
  if (scores.empty()) throw std::invalid_argument("evaluate_binary: empty input");

  BinaryMetrics m;
  size_t n_pos = 0, n_neg = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    bool pred = scores[i] >= threshold;
    bool pos = labels[i] == 1;
    if (pos)
      ++n_pos;
    else
      ++n_neg;
    if (pred && pos) ++m.tp;
    if (pred && !pos) ++m.fp;
    if (!pred && pos) ++m.fn;
    if (!pred && !pos) ++m.tn;
  }
  m.precision = (m.tp + m.fp) == 0 ? 0.0
                                   : static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
  m.recall = (m.tp + m.fn) == 0 ? 0.0
                                : static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  m.f1 = (m.precision + m.recall) == 0 ? 0.0
                                       : 2.0 * m.precision * m.recall / (m.precision + m.recall);

  if (n_pos > 0 && n_neg > 0) {
    // Mann-Whitney rank statistic. All tie handling stays in integers
    // (doubled ranks), so this matches exhaustive concordant-pair counting
    // bit for bit.
    std::vector<size_t> order(scores.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      return scores[a] < scores[b];
    });
    uint64_t rank2_sum_pos = 0;  // twice the midrank sum over positives
    size_t i = 0;
    while (i < order.size()) {
      size_t j = i;
      while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
      uint64_t rank2 = static_cast<uint64_t>(i + 1) + static_cast<uint64_t>(j);  // 2 * midrank
      for (size_t k = i; k < j; ++k)
        if (labels[order[k]] == 1) rank2_sum_pos += rank2;
      i = j;
    }
    uint64_t np = n_pos;
    m.auc = static_cast<double>(rank2_sum_pos - np * (np + 1)) /
            static_cast<double>(2 * np * static_cast<uint64_t>(n_neg));
  }
  return m;
}

namespace {

MlpDataset make_mlp_dataset(const std::vector<std::vector<double>>& features,
                            const std::vector<int>& labels, const std::vector<size_t>& idx) {
  MlpDataset d;
  for (size_t i : idx) d.add(features[i], labels[i]);
  return d;
}

}  // namespace

PpiReport run_ppi(const PpiData& data, const Embedding& embedding, const SplitSpec& split,
                  const TrainHyper& hyper) {
  if (data.instances.empty()) throw std::runtime_error("no usable pair instances");
  auto idx = split_indices(data.instances.size(), split);
  if (idx.train.empty() || idx.validation.empty() || idx.test.empty())
    throw std::runtime_error("split produced an empty subset; dataset too small");

  std::vector<std::vector<double>> features;
  std::vector<int> labels;
  features.reserve(data.instances.size());
  for (const auto& inst : data.instances) {
    features.push_back(ppi_features(inst, embedding));
    labels.push_back(inst.label);
  }

  std::vector<size_t> sizes;
  sizes.push_back(2 * embedding.dimension);
  for (size_t h : hyper.hidden) sizes.push_back(h);
  sizes.push_back(1);
  Mlp mlp = Mlp::init(sizes, hyper.seed);

  PpiReport report;
  report.split_digest = idx.digest();
  report.init_digest = mlp.params_digest();
  report.n_train = idx.train.size();
  report.n_validation = idx.validation.size();
  report.n_test = idx.test.size();
  report.dropped_instances = data.dropped;

  auto train_set = make_mlp_dataset(features, labels, idx.train);
  auto val_set = make_mlp_dataset(features, labels, idx.validation);
  auto fit = train_mlp(std::move(mlp), train_set, val_set, hyper);
  report.best_epoch = fit.best_epoch;
  report.epochs_run = fit.epochs_run;

  std::vector<double> scores;
  std::vector<int> test_labels;
  for (size_t i : idx.test) {
    scores.push_back(mlp_forward(fit.model, features[i])[0]);
    test_labels.push_back(labels[i]);
  }
  report.metrics = evaluate_binary(scores, test_labels);
  return report;
}

std::string_view ddi_label_name(DdiLabel label) {
  switch (label) {
    case DdiLabel::Mechanism: return "mechanism";
    case DdiLabel::Effect: return "effect";
    case DdiLabel::Advice: return "advice";
    case DdiLabel::Int: return "int";
    case DdiLabel::Negative: return "negative";
  }
  return "?";
}

std::optional<DdiLabel> parse_ddi_label(std::string_view name) {
  for (DdiLabel l : {DdiLabel::Mechanism, DdiLabel::Effect, DdiLabel::Advice, DdiLabel::Int,
                     DdiLabel::Negative})
    if (name == ddi_label_name(l)) return l;
  return std::nullopt;
}

std::vector<DdiInstance> load_ddi_file(std::istream& in) {
  std::vector<DdiInstance> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error("ddi file line " + std::to_string(line_no) + ": " + e.what());
    }
    DdiInstance inst;
    try {
      inst.sentence_tokens = j.at("tokens").get<std::vector<std::string>>();
      inst.drug_a = j.at("drug_a").get<std::string>();
      inst.drug_b = j.at("drug_b").get<std::string>();
      auto label = parse_ddi_label(j.at("label").get<std::string>());
      if (!label) throw std::runtime_error("unknown label");
      inst.label = *label;
    } catch (const std::exception& e) {
      throw std::runtime_error("ddi file line " + std::to_string(line_no) + ": " + e.what());
    }
    auto contains = [&](const std::string& drug) {
      return std::find(inst.sentence_tokens.begin(), inst.sentence_tokens.end(), drug) !=
             inst.sentence_tokens.end();
    };
    if (!contains(inst.drug_a) || !contains(inst.drug_b))
      throw std::runtime_error("ddi file line " + std::to_string(line_no) +
                               ": drug token does not occur in the sentence");
    out.push_back(std::move(inst));
  }
  return out;
}

SenFeatures sen_features(const DdiInstance& instance, const Embedding& embedding,
                         bool augment_concepts) {
  SenFeatures out;
  const size_t dim = embedding.dimension;
  std::vector<double> mean(dim, 0.0);
  size_t used = 0;
  for (const auto& token : instance.sentence_tokens) {
    auto idx = embedding.find(token);
    if (!idx) {
      ++out.oov_tokens;
      continue;
    }
    auto row = embedding.row(*idx);
    for (size_t j = 0; j < dim; ++j) mean[j] += static_cast<double>(row[j]);
    ++used;
  }
  if (used == 0)
    throw std::runtime_error("no sentence token is in the embedding");
  for (double& v : mean) v /= static_cast<double>(used);

  out.features = std::move(mean);
  if (augment_concepts) {
    // missing drug vectors contribute zeros so the feature arity is stable
    for (const auto* drug : {&instance.drug_a, &instance.drug_b}) {
      auto idx = embedding.find(*drug);
      if (idx) {
        auto row = embedding.row(*idx);
        for (size_t j = 0; j < dim; ++j) out.features.push_back(static_cast<double>(row[j]));
      } else {
        ++out.missing_drugs;
        out.features.insert(out.features.end(), dim, 0.0);
      }
    }
  }
  return out;
}

DdiMetrics evaluate_ddi(const std::vector<DdiLabel>& predictions,
                        const std::vector<DdiLabel>& gold) {
  if (predictions.size() != gold.size())
    throw std::invalid_argument("evaluate_ddi: size mismatch");
  auto f1_of = [](uint64_t tp, uint64_t fp, uint64_t fn) {
    double p = (tp + fp) == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    double r = (tp + fn) == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    return std::array<double, 3>{p, r, (p + r) == 0 ? 0.0 : 2.0 * p * r / (p + r)};
  };

  DdiMetrics m;
  uint64_t tp_sum = 0, fp_sum = 0, fn_sum = 0;
  for (size_t t = 0; t < kDdiPositiveLabels.size(); ++t) {
    DdiLabel type = kDdiPositiveLabels[t];
    uint64_t tp = 0, fp = 0, fn = 0;
    for (size_t i = 0; i < gold.size(); ++i) {
      if (predictions[i] == type && gold[i] == type) ++tp;
      if (predictions[i] == type && gold[i] != type) ++fp;
      if (gold[i] == type && predictions[i] != type) ++fn;
    }
    m.per_type_f1[t] = f1_of(tp, fp, fn)[2];
    tp_sum += tp;
    fp_sum += fp;
    fn_sum += fn;
  }
  auto micro = f1_of(tp_sum, fp_sum, fn_sum);
  m.micro_precision = micro[0];
  m.micro_recall = micro[1];
  m.micro_f1 = micro[2];
  return m;
}

DdiReport run_ddi(const std::vector<DdiInstance>& train, const std::vector<DdiInstance>& test,
                  const Embedding& embedding, const TrainHyper& hyper,
                  const std::vector<uint64_t>& seeds, bool augment_concepts,
                  double validation_fraction) {
  if (train.empty() || test.empty()) throw std::runtime_error("empty ddi train or test set");
  if (seeds.empty()) throw std::invalid_argument("run_ddi needs at least one seed");
  if (!(validation_fraction > 0) || validation_fraction >= 1)
    throw std::invalid_argument("validation_fraction must be in (0, 1)");

  DdiReport report;
  std::vector<std::vector<double>> train_features, test_features;
  std::vector<int> train_labels, test_labels;
  for (const auto& inst : train) {
    auto f = sen_features(inst, embedding, augment_concepts);
    report.oov_tokens += f.oov_tokens;
    report.missing_drugs += f.missing_drugs;
    train_features.push_back(std::move(f.features));
    train_labels.push_back(static_cast<int>(inst.label));
  }
  for (const auto& inst : test) {
    auto f = sen_features(inst, embedding, augment_concepts);
    report.oov_tokens += f.oov_tokens;
    report.missing_drugs += f.missing_drugs;
    test_features.push_back(std::move(f.features));
    test_labels.push_back(static_cast<int>(inst.label));
  }

  // inverse-frequency class weights against the training class imbalance
  std::array<uint64_t, kDdiClassCount> counts{};
  for (int y : train_labels) ++counts[static_cast<size_t>(y)];
  size_t present = 0;
  for (uint64_t c : counts)
    if (c > 0) ++present;
  std::vector<double> class_weights(kDdiClassCount, 0.0);
  for (size_t c = 0; c < kDdiClassCount; ++c)
    if (counts[c] > 0)
      class_weights[c] = static_cast<double>(train_labels.size()) /
                         (static_cast<double>(present) * static_cast<double>(counts[c]));

  const size_t fdim = train_features.front().size();
  for (uint64_t seed : seeds) {
    // validation slice carved from the training set, seeded per run
    std::vector<size_t> order(train.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(Rng::derive(seed, 0xDD1));
    shuffle(order, rng);
    size_t n_val = std::max<size_t>(1, static_cast<size_t>(std::floor(
                                           validation_fraction * static_cast<double>(order.size()))));
    if (n_val >= order.size()) n_val = order.size() - 1;
    std::vector<size_t> val_idx(order.begin(), order.begin() + n_val);
    std::vector<size_t> train_idx(order.begin() + n_val, order.end());

    MlpDataset train_set = make_mlp_dataset(train_features, train_labels, train_idx);
    MlpDataset val_set = make_mlp_dataset(train_features, train_labels, val_idx);

    std::vector<size_t> sizes;
    sizes.push_back(fdim);
    for (size_t h : hyper.hidden) sizes.push_back(h);
    sizes.push_back(kDdiClassCount);
    Mlp mlp = Mlp::init(sizes, seed);

    DdiSeedRun run;
    run.seed = seed;
    run.init_digest = mlp.params_digest();
    {
      SplitIndices si;
      si.train = train_idx;
      si.validation = val_idx;
      run.split_digest = si.digest();
    }

    TrainHyper seeded = hyper;
    seeded.seed = seed;
    auto fit = train_mlp(std::move(mlp), train_set, val_set, seeded, class_weights);
    run.best_epoch = fit.best_epoch;

    std::vector<DdiLabel> predictions;
    predictions.reserve(test_features.size());
    for (const auto& f : test_features) {
      auto probs = mlp_forward(fit.model, f);
      size_t arg = 0;
      for (size_t c = 1; c < probs.size(); ++c)
        if (probs[c] > probs[arg]) arg = c;
      predictions.push_back(static_cast<DdiLabel>(arg));
    }
    std::vector<DdiLabel> gold;
    gold.reserve(test_labels.size());
    for (int y : test_labels) gold.push_back(static_cast<DdiLabel>(y));
    run.metrics = evaluate_ddi(predictions, gold);
    report.runs.push_back(std::move(run));
  }

  auto& mean = report.mean;
  for (const auto& run : report.runs) {
    mean.micro_precision += run.metrics.micro_precision;
    mean.micro_recall += run.metrics.micro_recall;
    mean.micro_f1 += run.metrics.micro_f1;
    for (size_t t = 0; t < mean.per_type_f1.size(); ++t)
      mean.per_type_f1[t] += run.metrics.per_type_f1[t];
  }
  const double inv = 1.0 / static_cast<double>(report.runs.size());
  mean.micro_precision *= inv;
  mean.micro_recall *= inv;
  mean.micro_f1 *= inv;
  for (double& v : mean.per_type_f1) v *= inv;
  return report;
}

}  // namespace conceptvec
