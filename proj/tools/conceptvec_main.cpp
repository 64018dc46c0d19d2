// conceptvec command line: normalize annotated corpora, train concept
// embeddings, and run the intrinsic/extrinsic evaluation protocols.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "conceptvec/config.hpp"
#include "conceptvec/corpus.hpp"
#include "conceptvec/downstream.hpp"
#include "conceptvec/embedding.hpp"
#include "conceptvec/glove.hpp"
#include "conceptvec/intrinsic.hpp"
#include "conceptvec/trainers.hpp"
#include "conceptvec/util.hpp"
#include "conceptvec/vocab.hpp"

namespace cv = conceptvec;

namespace {

class WallClock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string hex64(uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open input file: " + path);
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  return out;
}

void remove_outputs(const std::vector<std::string>& paths) {
  for (const auto& p : paths) {
    std::error_code ec;
    std::filesystem::remove(p, ec);
  }
}

// ----------------------------------------------------------------- normalize

struct NormalizeArgs {
  std::string input, output, report;
  bool skip_bad_blocks = false;
};

int cmd_normalize(const NormalizeArgs& args) {
  WallClock clock;
  std::vector<std::string> outputs = {args.output, args.report};
  try {
    auto in = open_input(args.input);
    cv::ParseReport report;
    auto docs = cv::parse_pubtator(in, report,
                                   args.skip_bad_blocks ? cv::OnBlockError::Skip
                                                        : cv::OnBlockError::Abort);
    auto corpus_out = open_output(args.output);
    for (const auto& d : docs) {
      auto norm = cv::normalize_document(d.doc, d.annotations);
      for (size_t i = 0; i < norm.tokens.size(); ++i) {
        if (i) corpus_out << ' ';
        corpus_out << norm.tokens[i];
      }
      corpus_out << '\n';
    }
    corpus_out.close();
    auto report_out = open_output(args.report);
    report_out << report.to_key_value();
    for (const auto& e : report.block_errors) report_out << "# skipped " << e << '\n';
    report_out.close();

    cv::Manifest manifest;
    manifest.subcommand = "normalize";
    manifest.inputs = {args.input};
    manifest.outputs = outputs;
    manifest.parameters["input"] = args.input;
    manifest.parameters["output"] = args.output;
    manifest.parameters["report"] = args.report;
    manifest.parameters["skip_bad_blocks"] = args.skip_bad_blocks ? "true" : "false";
    manifest.extra["documents"] = std::to_string(report.documents);
    manifest.extra["annotations_kept"] = std::to_string(report.annotations_kept);
    manifest.wall_clock_seconds = clock.seconds();
    cv::write_manifest(manifest, args.output + ".manifest.json");
    return 0;
  } catch (const cv::BlockError& e) {
    remove_outputs(outputs);
    std::cerr << "normalize: parse abort at " << e.what() << '\n';
    return 1;
  } catch (...) {
    remove_outputs(outputs);
    throw;
  }
}

// --------------------------------------------------------------------- train

struct TrainArgs {
  std::string corpus, output, config_path, save_vocab;
  std::string model = "cbow";
  bool concept_only = false;
  // string-valued so that config-file values and flag overrides merge
  std::map<std::string, std::string> overrides;
};

template <typename T>
T parse_number(const std::string& key, const std::string& value);

template <>
uint64_t parse_number<uint64_t>(const std::string& key, const std::string& value) {
  try {
    return std::stoull(value);
  } catch (...) {
    throw cv::ConfigError(key, key + " must be a non-negative integer");
  }
}

template <>
double parse_number<double>(const std::string& key, const std::string& value) {
  try {
    return std::stod(value);
  } catch (...) {
    throw cv::ConfigError(key, key + " must be a number");
  }
}

struct EffectiveTrainConfig {
  cv::TrainingConfig training;
  cv::FastTextConfig fasttext;
  cv::GloveConfig glove;
  std::map<std::string, std::string> echo;  // every effective value, for the manifest
};

EffectiveTrainConfig resolve_train_config(const TrainArgs& args) {
  std::map<std::string, std::string> merged;
  if (!args.config_path.empty()) merged = cv::load_key_value_config_file(args.config_path);
  for (const auto& [k, v] : args.overrides) merged[k] = v;
  merged["model"] = args.model;

  EffectiveTrainConfig out;
  auto& t = out.training;
  auto& ft = out.fasttext;
  auto& g = out.glove;
  for (const auto& [key, value] : merged) {
    if (key == "dimension") t.dimension = parse_number<uint64_t>(key, value);
    else if (key == "window") t.window = parse_number<uint64_t>(key, value);
    else if (key == "negatives") t.negatives = parse_number<uint64_t>(key, value);
    else if (key == "subsample_threshold") t.subsample_threshold = parse_number<double>(key, value);
    else if (key == "min_count") t.min_count = static_cast<int64_t>(parse_number<uint64_t>(key, value));
    else if (key == "learning_rate") t.learning_rate = parse_number<double>(key, value);
    else if (key == "epochs") t.epochs = parse_number<uint64_t>(key, value);
    else if (key == "seed") t.seed = parse_number<uint64_t>(key, value);
    else if (key == "workers") t.workers = parse_number<uint64_t>(key, value);
    else if (key == "model") {
      auto m = cv::parse_model_type(value);
      if (!m) throw cv::ConfigError("model", "model must be cbow|skipgram|glove|fasttext");
      t.model = *m;
    } else if (key == "min_ngram") ft.min_ngram = parse_number<uint64_t>(key, value);
    else if (key == "max_ngram") ft.max_ngram = parse_number<uint64_t>(key, value);
    else if (key == "bucket_count") ft.bucket_count = parse_number<uint64_t>(key, value);
    else if (key == "x_max") g.x_max = parse_number<double>(key, value);
    else if (key == "weight_alpha") g.weight_alpha = parse_number<double>(key, value);
    else if (key == "initial_step") g.initial_step = parse_number<double>(key, value);
    else throw cv::ConfigError(key, "unknown configuration key '" + key + "'");
  }
  t.validate();
  ft.validate();
  g.validate();

  auto fmt = [](double v) {
    std::ostringstream os;
    os << v;
    return os.str();
  };
  out.echo["dimension"] = std::to_string(t.dimension);
  out.echo["window"] = std::to_string(t.window);
  out.echo["negatives"] = std::to_string(t.negatives);
  out.echo["subsample_threshold"] = fmt(t.subsample_threshold);
  out.echo["min_count"] = std::to_string(t.min_count);
  out.echo["learning_rate"] = fmt(t.learning_rate);
  out.echo["epochs"] = std::to_string(t.epochs);
  out.echo["model"] = std::string(cv::model_type_name(t.model));
  out.echo["seed"] = std::to_string(t.seed);
  out.echo["workers"] = std::to_string(t.workers);
  if (t.model == cv::ModelType::FastTextVariant) {
    out.echo["min_ngram"] = std::to_string(ft.min_ngram);
    out.echo["max_ngram"] = std::to_string(ft.max_ngram);
    out.echo["bucket_count"] = std::to_string(ft.bucket_count);
  }
  if (t.model == cv::ModelType::Glove) {
    out.echo["x_max"] = fmt(g.x_max);
    out.echo["weight_alpha"] = fmt(g.weight_alpha);
    out.echo["initial_step"] = fmt(g.initial_step);
  }
  return out;
}

int cmd_train(const TrainArgs& args) {
  WallClock clock;
  EffectiveTrainConfig cfg;
  try {
    cfg = resolve_train_config(args);
  } catch (const cv::ConfigError& e) {
    std::cerr << "train: config error on field '" << e.field() << "': " << e.what() << '\n';
    return 1;
  }

  cv::Vocabulary vocab = [&] {
    auto in = open_input(args.corpus);
    return cv::Vocabulary::build_from_stream(in, cfg.training.min_count);
  }();
  cv::Corpus corpus = [&] {
    auto in = open_input(args.corpus);
    return cv::load_corpus_ids(in, vocab);
  }();

  std::string loss_log_path = args.output + ".loss.tsv";
  cv::TrainResult result;
  switch (cfg.training.model) {
    case cv::ModelType::Cbow:
      result = cv::train_cbow(corpus, vocab, cfg.training, &std::cerr);
      break;
    case cv::ModelType::SkipGram:
      result = cv::train_skipgram(corpus, vocab, cfg.training, &std::cerr);
      break;
    case cv::ModelType::FastTextVariant:
      result = cv::train_fasttext_variant(corpus, vocab, cfg.training, cfg.fasttext, &std::cerr);
      break;
    case cv::ModelType::Glove: {
      auto cooc = cv::build_cooccurrence(corpus, cfg.training.window);
      result = cv::train_glove(cooc, vocab.size(), cfg.training, cfg.glove, &std::cerr);
      break;
    }
  }

  auto embedding = cv::export_embedding(result.matrix, vocab, args.concept_only);
  cv::save_text(embedding, args.output);

  {
    auto loss_out = open_output(loss_log_path);
    loss_out << "epoch\tloss\n";
    for (size_t e = 0; e < result.log.epoch_loss.size(); ++e)
      loss_out << (e + 1) << '\t' << result.log.epoch_loss[e] << '\n';
  }
  if (!args.save_vocab.empty()) {
    auto vout = open_output(args.save_vocab);
    vocab.save(vout);
  }

  cv::Manifest manifest;
  manifest.subcommand = "train";
  manifest.inputs = {args.corpus};
  if (!args.config_path.empty()) manifest.inputs.push_back(args.config_path);
  manifest.outputs = {args.output, loss_log_path};
  if (!args.save_vocab.empty()) manifest.outputs.push_back(args.save_vocab);
  manifest.parameters = cfg.echo;
  manifest.parameters["corpus"] = args.corpus;
  manifest.parameters["output"] = args.output;
  manifest.parameters["concept_only"] = args.concept_only ? "true" : "false";
  manifest.seed = cfg.training.seed;
  manifest.extra["vocabulary_size"] = std::to_string(vocab.size());
  manifest.extra["corpus_tokens"] = std::to_string(cv::corpus_token_count(corpus));
  manifest.extra["exported_tokens"] = std::to_string(embedding.size());
  manifest.wall_clock_seconds = clock.seconds();
  cv::write_manifest(manifest, args.output + ".manifest.json");
  return 0;
}

// --------------------------------------------------------------------- query

struct QueryArgs {
  std::string embedding;
  std::string token;
  std::vector<std::string> pair;
  std::string avg_name;
  std::string type_filter;
  size_t k = 10;
};

int cmd_query(const QueryArgs& args) {
  auto embedding = cv::load_text(args.embedding);
  if (!args.pair.empty()) {
    auto a = embedding.find(args.pair[0]);
    auto b = embedding.find(args.pair[1]);
    for (size_t i = 0; i < 2; ++i) {
      if (!(i == 0 ? a : b)) {
        try {
          cv::nearest_neighbors(embedding, args.pair[i], 1);  // raises with hints
        } catch (const cv::UnknownTokenError& e) {
          std::cerr << "query: " << e.what() << '\n';
          return 1;
        }
      }
    }
    std::cout << cv::cosine(embedding.row(*a), embedding.row(*b)) << '\n';
    return 0;
  }

  std::vector<cv::Neighbor> neighbors;
  if (!args.avg_name.empty()) {
    auto avg = cv::avg_word_vector(args.avg_name, embedding);
    // rank against every token by brute force over the averaged vector
    std::vector<cv::Neighbor> all;
    for (size_t i = 0; i < embedding.size(); ++i) {
      if (!args.type_filter.empty() &&
          !std::string_view(embedding.tokens[i]).starts_with(args.type_filter))
        continue;
      all.push_back({embedding.tokens[i],
                     cv::cosine(std::span<const float>(avg.vector), embedding.row(i))});
    }
    std::sort(all.begin(), all.end(), [](const cv::Neighbor& x, const cv::Neighbor& y) {
      return x.similarity != y.similarity ? x.similarity > y.similarity : x.token < y.token;
    });
    if (all.size() > args.k) all.resize(args.k);
    neighbors = std::move(all);
  } else {
    try {
      neighbors = cv::nearest_neighbors(embedding, args.token, args.k, args.type_filter);
    } catch (const cv::UnknownTokenError& e) {
      std::cerr << "query: " << e.what() << '\n';
      return 1;
    }
  }
  for (const auto& n : neighbors) std::cout << n.token << '\t' << n.similarity << '\n';
  return 0;
}

// ------------------------------------------------------------ eval-intrinsic

struct EvalIntrinsicArgs {
  std::string embedding, dataset, associations, universe, output, per_group, save_dataset;
  size_t max_size = 100, min_size = 2;
  uint64_t seed = 1;
};

int cmd_eval_intrinsic(const EvalIntrinsicArgs& args) {
  WallClock clock;
  auto embedding = cv::load_text(args.embedding);

  cv::GroupDataset dataset;
  cv::BuildGroupsReport build_report;
  bool built = false;
  if (!args.dataset.empty()) {
    auto in = open_input(args.dataset);
    dataset = cv::load_group_dataset(in, std::filesystem::path(args.dataset).stem().string());
  } else {
    auto in = open_input(args.associations);
    auto associations = cv::load_associations(in);
    std::vector<std::string> universe;
    if (!args.universe.empty()) {
      auto uin = open_input(args.universe);
      std::string token;
      while (uin >> token)
        if (embedding.find(token)) universe.push_back(token);
    } else {
      // membership universe: tokens of any association that the embedding knows
      for (const auto& [key, members] : associations)
        for (const auto& m : members)
          if (embedding.find(m)) universe.push_back(m);
    }
    dataset = cv::build_groups(associations, universe, args.max_size, args.min_size, args.seed,
                               &build_report);
    dataset.name = std::filesystem::path(args.associations).stem().string();
    built = true;
    if (!args.save_dataset.empty()) {
      auto out = open_output(args.save_dataset);
      cv::save_group_dataset(dataset, out);
    }
  }

  auto result = cv::group_similarity_difference(dataset, embedding);

  auto out = open_output(args.output);
  out << "dataset\t" << dataset.name << '\n';
  out << "groups\t" << dataset.groups.size() << '\n';
  out << "avg_group_similarity_difference_pct\t" << result.difference_pct << '\n';
  if (built) {
    out << "groups_skipped_too_small\t" << build_report.skipped_too_small << '\n';
    out << "groups_skipped_universe_exhausted\t" << build_report.skipped_universe_exhausted
        << '\n';
  }
  out.close();

  if (!args.per_group.empty()) {
    auto pg = open_output(args.per_group);
    pg << "group_id\tdifference_pct\n";
    for (const auto& [id, diff] : result.per_group) pg << id << '\t' << 100.0 * diff << '\n';
  }

  cv::Manifest manifest;
  manifest.subcommand = "eval-intrinsic";
  manifest.inputs = {args.embedding};
  if (!args.dataset.empty()) manifest.inputs.push_back(args.dataset);
  if (!args.associations.empty()) manifest.inputs.push_back(args.associations);
  if (!args.universe.empty()) manifest.inputs.push_back(args.universe);
  manifest.outputs = {args.output};
  if (!args.per_group.empty()) manifest.outputs.push_back(args.per_group);
  if (!args.save_dataset.empty()) manifest.outputs.push_back(args.save_dataset);
  manifest.parameters["max_size"] = std::to_string(args.max_size);
  manifest.parameters["min_size"] = std::to_string(args.min_size);
  manifest.parameters["seed"] = std::to_string(args.seed);
  manifest.seed = args.seed;
  manifest.extra["difference_pct"] = std::to_string(result.difference_pct);
  manifest.wall_clock_seconds = clock.seconds();
  cv::write_manifest(manifest, args.output + ".manifest.json");
  std::cout << "avg_group_similarity_difference_pct\t" << result.difference_pct << '\n';
  return 0;
}

// ------------------------------------------------------------------ eval-ppi

struct EvalPpiArgs {
  std::string embedding, pairs, output;
  uint64_t seed = 1;
  double train_frac = 0.63, val_frac = 0.07, test_frac = 0.30;
  size_t batch = 128, max_epochs = 100, patience = 5;
  double learning_rate = 0.01;
  std::vector<size_t> hidden = {400, 200};
};

cv::TrainHyper make_hyper(const EvalPpiArgs& args) {
  cv::TrainHyper hyper;
  hyper.batch = args.batch;
  hyper.learning_rate = args.learning_rate;
  hyper.max_epochs = args.max_epochs;
  hyper.patience = args.patience;
  hyper.seed = args.seed;
  hyper.hidden = args.hidden;
  return hyper;
}

int cmd_eval_ppi(const EvalPpiArgs& args) {
  WallClock clock;
  auto embedding = cv::load_text(args.embedding);
  auto in = open_input(args.pairs);
  auto data = cv::load_ppi_file(in, embedding);

  cv::SplitSpec split{args.train_frac, args.val_frac, args.test_frac, args.seed};
  auto hyper = make_hyper(args);
  auto report = cv::run_ppi(data, embedding, split, hyper);

  auto out = open_output(args.output);
  out << "precision\t" << report.metrics.precision << '\n'
      << "recall\t" << report.metrics.recall << '\n'
      << "f1\t" << report.metrics.f1 << '\n'
      << "auc\t" << (report.metrics.auc ? std::to_string(*report.metrics.auc) : "undefined")
      << '\n'
      << "n_train\t" << report.n_train << '\n'
      << "n_validation\t" << report.n_validation << '\n'
      << "n_test\t" << report.n_test << '\n'
      << "dropped_instances\t" << report.dropped_instances << '\n'
      << "split_digest\t" << hex64(report.split_digest) << '\n'
      << "init_digest\t" << hex64(report.init_digest) << '\n'
      << "best_epoch\t" << report.best_epoch << '\n';
  out.close();

  cv::Manifest manifest;
  manifest.subcommand = "eval-ppi";
  manifest.inputs = {args.embedding, args.pairs};
  manifest.outputs = {args.output};
  manifest.parameters["seed"] = std::to_string(args.seed);
  manifest.parameters["train_fraction"] = std::to_string(args.train_frac);
  manifest.parameters["validation_fraction"] = std::to_string(args.val_frac);
  manifest.parameters["test_fraction"] = std::to_string(args.test_frac);
  manifest.parameters["batch"] = std::to_string(args.batch);
  manifest.parameters["learning_rate"] = std::to_string(args.learning_rate);
  manifest.parameters["max_epochs"] = std::to_string(args.max_epochs);
  manifest.parameters["patience"] = std::to_string(args.patience);
  {
    std::string h;
    for (size_t v : args.hidden) h += (h.empty() ? "" : ",") + std::to_string(v);
    manifest.parameters["hidden"] = h;
  }
  manifest.seed = args.seed;
  manifest.extra["split_digest"] = hex64(report.split_digest);
  manifest.extra["init_digest"] = hex64(report.init_digest);
  manifest.extra["auc"] = report.metrics.auc ? std::to_string(*report.metrics.auc) : "undefined";
  manifest.wall_clock_seconds = clock.seconds();
  cv::write_manifest(manifest, args.output + ".manifest.json");
  std::cout << "f1\t" << report.metrics.f1 << "\nauc\t"
            << (report.metrics.auc ? std::to_string(*report.metrics.auc) : "undefined") << '\n';
  return 0;
}

// ------------------------------------------------------------------ eval-ddi

struct EvalDdiArgs {
  std::string embedding, train, test, output;
  std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
  bool no_augment = false;
  size_t batch = 128, max_epochs = 100, patience = 5;
  double learning_rate = 0.01;
  std::vector<size_t> hidden = {400, 200};
};

int cmd_eval_ddi(const EvalDdiArgs& args) {
  WallClock clock;
  auto embedding = cv::load_text(args.embedding);
  auto train_in = open_input(args.train);
  auto test_in = open_input(args.test);
  auto train = cv::load_ddi_file(train_in);
  auto test = cv::load_ddi_file(test_in);

  cv::TrainHyper hyper;
  hyper.batch = args.batch;
  hyper.learning_rate = args.learning_rate;
  hyper.max_epochs = args.max_epochs;
  hyper.patience = args.patience;
  hyper.hidden = args.hidden;

  auto report = cv::run_ddi(train, test, embedding, hyper, args.seeds, !args.no_augment);

  auto out = open_output(args.output);
  out << "seed\tmicro_precision\tmicro_recall\tmicro_f1\tf1_mechanism\tf1_effect\tf1_advice\t"
         "f1_int\n";
  auto row = [&](const std::string& tag, const cv::DdiMetrics& m) {
    out << tag << '\t' << m.micro_precision << '\t' << m.micro_recall << '\t' << m.micro_f1;
    for (double v : m.per_type_f1) out << '\t' << v;
    out << '\n';
  };
  for (const auto& run : report.runs) row(std::to_string(run.seed), run.metrics);
  row("mean", report.mean);
  out.close();

  cv::Manifest manifest;
  manifest.subcommand = "eval-ddi";
  manifest.inputs = {args.embedding, args.train, args.test};
  manifest.outputs = {args.output};
  {
    std::string s;
    for (uint64_t v : args.seeds) s += (s.empty() ? "" : ",") + std::to_string(v);
    manifest.parameters["seeds"] = s;
  }
  manifest.parameters["augment_concepts"] = args.no_augment ? "false" : "true";
  manifest.parameters["batch"] = std::to_string(args.batch);
  manifest.parameters["learning_rate"] = std::to_string(args.learning_rate);
  manifest.parameters["max_epochs"] = std::to_string(args.max_epochs);
  manifest.parameters["patience"] = std::to_string(args.patience);
  manifest.seed = args.seeds.empty() ? 0 : args.seeds.front();
  for (const auto& run : report.runs) {
    manifest.extra["split_digest_seed_" + std::to_string(run.seed)] = hex64(run.split_digest);
    manifest.extra["init_digest_seed_" + std::to_string(run.seed)] = hex64(run.init_digest);
  }
  manifest.extra["mean_micro_f1"] = std::to_string(report.mean.micro_f1);
  manifest.wall_clock_seconds = clock.seconds();
  cv::write_manifest(manifest, args.output + ".manifest.json");
  std::cout << "mean_micro_f1\t" << report.mean.micro_f1 << '\n';
  return 0;
}

// ------------------------------------------------------------------ coverage

struct CoverageArgs {
  std::string embedding, reference, output;
};

int cmd_coverage(const CoverageArgs& args) {
  WallClock clock;
  auto embedding = cv::load_text(args.embedding);
  std::vector<std::string> reference;
  if (!args.reference.empty()) {
    auto in = open_input(args.reference);
    std::string token;
    while (in >> token) reference.push_back(token);
  }
  auto report = cv::coverage_report(embedding, reference);
  auto out = open_output(args.output);
  out << report.to_tsv();
  out.close();

  cv::Manifest manifest;
  manifest.subcommand = "coverage";
  manifest.inputs = {args.embedding};
  if (!args.reference.empty()) manifest.inputs.push_back(args.reference);
  manifest.outputs = {args.output};
  manifest.extra["intersection"] = std::to_string(report.intersection);
  manifest.extra["reference_size"] = std::to_string(report.reference_size);
  manifest.wall_clock_seconds = clock.seconds();
  cv::write_manifest(manifest, args.output + ".manifest.json");
  std::cout << report.to_tsv();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"biomedical concept embedding pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(cv::kToolVersion));

  NormalizeArgs normalize_args;
  auto* normalize = app.add_subcommand("normalize", "rewrite an annotated corpus into concept tokens");
  normalize->add_option("--input", normalize_args.input, "PubTator-format input")->required();
  normalize->add_option("--output", normalize_args.output, "normalized corpus path")->required();
  normalize->add_option("--report", normalize_args.report, "parse report path")->required();
  normalize->add_flag("--skip-bad-blocks", normalize_args.skip_bad_blocks,
                      "skip structurally broken blocks instead of aborting");

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "train an embedding on a normalized corpus");
  train->add_option("--corpus", train_args.corpus, "normalized corpus")->required();
  train->add_option("--output", train_args.output, "embedding output path")->required();
  train->add_option("--model", train_args.model, "cbow|skipgram|glove|fasttext");
  train->add_option("--config", train_args.config_path, "key = value config file");
  train->add_flag("--concept-only", train_args.concept_only, "export concept tokens only");
  train->add_option("--save-vocab", train_args.save_vocab, "also write the vocabulary file");
  for (const char* key :
       {"dimension", "window", "negatives", "subsample_threshold", "min_count", "learning_rate",
        "epochs", "seed", "workers", "min_ngram", "max_ngram", "bucket_count", "x_max",
        "weight_alpha", "initial_step"}) {
    train->add_option_function<std::string>(
        std::string("--") + key,
        [&train_args, key = std::string(key)](const std::string& v) {
          train_args.overrides[key] = v;
        },
        std::string("override config key ") + key);
  }

  QueryArgs query_args;
  auto* query = app.add_subcommand("query", "nearest neighbours or pairwise cosine");
  query->add_option("--embedding", query_args.embedding, "embedding file")->required();
  query->add_option("--token", query_args.token, "query token");
  query->add_option("--pair", query_args.pair, "two tokens for pairwise cosine")->expected(2);
  query->add_option("--avg-name", query_args.avg_name,
                    "average the word vectors of this concept name and rank neighbours");
  query->add_option("--type-filter", query_args.type_filter, "prefix filter, e.g. Gene_");
  query->add_option("--k", query_args.k, "number of neighbours");

  EvalIntrinsicArgs intrinsic_args;
  auto* eval_intrinsic = app.add_subcommand("eval-intrinsic", "group similarity difference");
  eval_intrinsic->add_option("--embedding", intrinsic_args.embedding)->required();
  eval_intrinsic->add_option("--dataset", intrinsic_args.dataset, "group dataset (JSONL)");
  eval_intrinsic->add_option("--associations", intrinsic_args.associations,
                             "key<TAB>member association file to build groups from");
  eval_intrinsic->add_option("--universe", intrinsic_args.universe,
                             "optional universe token list for unrelated sampling");
  eval_intrinsic->add_option("--output", intrinsic_args.output)->required();
  eval_intrinsic->add_option("--per-group", intrinsic_args.per_group, "per-group TSV path");
  eval_intrinsic->add_option("--save-dataset", intrinsic_args.save_dataset,
                             "write the built dataset as JSONL");
  eval_intrinsic->add_option("--max-size", intrinsic_args.max_size);
  eval_intrinsic->add_option("--min-size", intrinsic_args.min_size);
  eval_intrinsic->add_option("--seed", intrinsic_args.seed);

  EvalPpiArgs ppi_args;
  auto* eval_ppi = app.add_subcommand("eval-ppi", "pair classification protocol");
  eval_ppi->add_option("--embedding", ppi_args.embedding)->required();
  eval_ppi->add_option("--pairs", ppi_args.pairs, "token_a<TAB>token_b<TAB>label file")->required();
  eval_ppi->add_option("--output", ppi_args.output)->required();
  eval_ppi->add_option("--seed", ppi_args.seed);
  eval_ppi->add_option("--train-frac", ppi_args.train_frac);
  eval_ppi->add_option("--val-frac", ppi_args.val_frac);
  eval_ppi->add_option("--test-frac", ppi_args.test_frac);
  eval_ppi->add_option("--batch", ppi_args.batch);
  eval_ppi->add_option("--learning-rate", ppi_args.learning_rate);
  eval_ppi->add_option("--max-epochs", ppi_args.max_epochs);
  eval_ppi->add_option("--patience", ppi_args.patience);
  eval_ppi->add_option("--hidden", ppi_args.hidden, "hidden layer sizes")->expected(-1);

  EvalDdiArgs ddi_args;
  auto* eval_ddi = app.add_subcommand("eval-ddi", "sentence classification protocol");
  eval_ddi->add_option("--embedding", ddi_args.embedding)->required();
  eval_ddi->add_option("--train", ddi_args.train, "training JSONL")->required();
  eval_ddi->add_option("--test", ddi_args.test, "test JSONL")->required();
  eval_ddi->add_option("--output", ddi_args.output)->required();
  eval_ddi->add_option("--seeds", ddi_args.seeds, "random seeds (paper protocol: 5)")
      ->expected(-1);
  eval_ddi->add_flag("--no-augment", ddi_args.no_augment, "disable drug-vector augmentation");
  eval_ddi->add_option("--batch", ddi_args.batch);
  eval_ddi->add_option("--learning-rate", ddi_args.learning_rate);
  eval_ddi->add_option("--max-epochs", ddi_args.max_epochs);
  eval_ddi->add_option("--patience", ddi_args.patience);
  eval_ddi->add_option("--hidden", ddi_args.hidden, "hidden layer sizes")->expected(-1);

  CoverageArgs coverage_args;
  auto* coverage = app.add_subcommand("coverage", "concept coverage report");
  coverage->add_option("--embedding", coverage_args.embedding)->required();
  coverage->add_option("--reference", coverage_args.reference, "reference concept-token list");
  coverage->add_option("--output", coverage_args.output)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*normalize) return cmd_normalize(normalize_args);
    if (*train) return cmd_train(train_args);
    if (*query) return cmd_query(query_args);
    if (*eval_intrinsic) return cmd_eval_intrinsic(intrinsic_args);
    if (*eval_ppi) return cmd_eval_ppi(ppi_args);
    if (*eval_ddi) return cmd_eval_ddi(ddi_args);
    if (*coverage) return cmd_coverage(coverage_args);
  } catch (const cv::ConfigError& e) {
    std::cerr << app.get_name() << ": config error on field '" << e.field() << "': " << e.what()
              << '\n';
    return 1;
  } catch (const std::bad_alloc&) {
    std::cerr << app.get_name() << ": out of memory\n";
    return 2;
  } catch (const std::logic_error& e) {
    std::cerr << app.get_name() << ": internal error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << app.get_name() << ": " << e.what() << '\n';
    return 1;
  }
  return 2;
}
