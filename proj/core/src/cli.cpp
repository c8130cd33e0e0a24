#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "sentclass/error.hpp"
#include "sentclass/harness.hpp"
#include "sentclass/rng.hpp"

namespace sentclass {

namespace {

// Shared dataset/config flags. Flag values are staged as config overrides so
// one precedence rule holds everywhere: defaults < config file < CLI flags.
struct CommonOpts {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;

  RunConfig resolve(KeyValueConfig* merged_out = nullptr) const {
    KeyValueConfig kv;
    if (!config_path.empty()) kv.load_file(config_path);
    for (const auto& [key, value] : overrides) kv.set(key, value);
    RunConfig rc;
    rc.apply(kv);
    if (merged_out != nullptr) *merged_out = kv;
    return rc;
  }
};

void stage(CLI::App* cmd, CommonOpts& opts, const std::string& flag, const std::string& key,
           const std::string& desc) {
  cmd->add_option_function<std::string>(
      flag, [&opts, key](const std::string& value) { opts.overrides.emplace_back(key, value); },
      desc);
}

void add_data_flags(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "key = value config file");
  stage(cmd, opts, "--format", "format", "dataset format: tsv or polarity");
  stage(cmd, opts, "--dataset", "dataset", "labeled TSV file, one `label<TAB>text` per line");
  stage(cmd, opts, "--pos", "pos", "positive-class sentence file (polarity format)");
  stage(cmd, opts, "--neg", "neg", "negative-class sentence file (polarity format)");
  cmd->add_flag_callback(
      "--tagged", [&opts] { opts.overrides.emplace_back("tagged", "true"); },
      "dataset tokens are word_TAG pairs");
  stage(cmd, opts, "--tag-lexicon", "tag_lexicon", "word<TAB>TAG overrides for the built-in tagger");
  stage(cmd, opts, "--seed", "seed", "global random seed");
}

std::string short_name(const std::string& name) {
  const size_t slash = name.find_last_of('/');
  std::string base = slash == std::string::npos ? name : name.substr(slash + 1);
  const size_t dot = base.find_last_of('.');
  if (dot != std::string::npos && dot > 0) base = base.substr(0, dot);
  return base.empty() ? "dataset" : base;
}

LabeledDataset load_dataset(const RunConfig& rc) {
  LabeledDataset ds;
  if (rc.format == "polarity") {
    if (rc.pos_path.empty() || rc.neg_path.empty()) fail("polarity format needs --pos and --neg");
    ds = load_polarity_pair(rc.pos_path, rc.neg_path);
  } else if (rc.format == "tsv") {
    if (rc.dataset_path.empty()) fail("tsv format needs --dataset");
    ds = load_tsv(rc.dataset_path, rc.tagged_input);
  } else {
    fail("unknown dataset format '" + rc.format + "' (expected tsv or polarity)");
  }
  tokenize_dataset(ds);
  return ds;
}

void ensure_tags(LabeledDataset& ds, const RunConfig& rc) {
  bool missing = false;
  for (const Example& ex : ds.examples) {
    if (ex.pos_tags.empty() && !ex.tokens.empty()) {
      missing = true;
      break;
    }
  }
  if (!missing) return;
  PosTagger tagger;
  if (!rc.tag_lexicon_path.empty()) tagger.load_lexicon(rc.tag_lexicon_path);
  tag_dataset(ds, tagger);
}

bool classifier_needs_pos(const std::string& classifier) {
  return classifier == "pos_cnn" || classifier == "combined";
}

EmbeddingTable resolve_embeddings(const RunConfig& rc, const LabeledDataset& train_split) {
  if (rc.embedding_source == "none") fail("this command needs --embeddings");
  if (rc.embedding_source == "train") {
    std::vector<std::vector<std::string>> corpus;
    corpus.reserve(train_split.size());
    for (const Example& ex : train_split.examples) corpus.push_back(ex.tokens);
    SgnsReport report;
    EmbeddingTable table = train_sgns(corpus, rc.sgns, &report);
    for (size_t e = 0; e < report.epoch_loss.size(); ++e) {
      std::fprintf(stderr, "sgns epoch %zu/%zu loss %.4f\n", e + 1, report.epoch_loss.size(),
                   report.epoch_loss[e]);
    }
    std::fprintf(stderr, "sgns trained %lld words from %lld tokens\n",
                 static_cast<long long>(report.vocab_words),
                 static_cast<long long>(report.total_tokens));
    return table;
  }
  return load_table(rc.embedding_source);
}

EmbeddingTable require_table_file(const std::string& source, const char* who) {
  if (source == "none" || source == "train") {
    fail(std::string(who) + " needs --embeddings <table file>");
  }
  return load_table(source);
}

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Metrics run_train_once(const RunConfig& rc, const std::string& model_out) {
  rc.validate();
  const std::string fingerprint = config_fingerprint(rc);
  LabeledDataset ds = load_dataset(rc);
  if (classifier_needs_pos(rc.classifier)) ensure_tags(ds, rc);
  auto [train_ds, eval_ds] = split(ds, rc.eval_fraction, rc.seed);
  std::fprintf(stderr, "split: %zu train / %zu eval\n", train_ds.size(), eval_ds.size());

  const auto start = std::chrono::steady_clock::now();
  Metrics metrics;
  if (rc.classifier == "forest") {
    EmbeddingTable table = resolve_embeddings(rc, train_ds);
    SeedLexicon lexicon = load_lexicon(rc.lexicon_path, table);
    if (!lexicon.skipped.empty()) {
      std::fprintf(stderr, "lexicon: %zu of %zu entries have no in-table word\n",
                   lexicon.skipped.size(), lexicon.skipped.size() + lexicon.entries.size());
    }
    auto [features, labels] = featurize_dataset(train_ds, lexicon, table);
    std::vector<std::string> names(kFeatureNames.begin(), kFeatureNames.end());
    Forest forest = train_forest(features, labels, rc.forest, std::move(names));
    metrics = evaluate_forest(forest, lexicon, table, eval_ds);
    if (!model_out.empty()) save_forest_model(model_out, forest, lexicon, fingerprint);
  } else {
    ModelConfig cfg = rc.nn;
    cfg.variant = parse_variant(rc.classifier);
    EmbeddingTable table;
    const EmbeddingTable* table_ptr = nullptr;
    if (cfg.variant != Variant::pos_cnn && rc.embedding_source != "none") {
      table = resolve_embeddings(rc, train_ds);
      if (table.dim() != cfg.word_dim) {
        std::fprintf(stderr, "following embedding table dimension %d (config said %d)\n",
                     table.dim(), cfg.word_dim);
        cfg.word_dim = table.dim();
      }
      table_ptr = &table;
    }
    TrainResult result = train_model(cfg, train_ds, eval_ds, table_ptr);
    for (size_t e = 0; e < result.report.epochs.size(); ++e) {
      const EpochStats& s = result.report.epochs[e];
      std::fprintf(stderr, "epoch %zu/%zu train_loss %.4f train_acc %.4f eval_acc %.4f\n", e + 1,
                   result.report.epochs.size(), s.train_loss, s.train_accuracy, s.eval_accuracy);
    }
    std::fprintf(stderr, "best epoch %d eval_acc %.4f\n", result.report.best_epoch + 1,
                 result.report.best_eval_accuracy);
    metrics = evaluate_cnn(result.model, eval_ds);
    if (!model_out.empty()) save_cnn_model(model_out, result.model, fingerprint);
  }
  metrics.task = "train";
  metrics.fingerprint = fingerprint;
  metrics.wall_seconds = elapsed_seconds(start);
  return metrics;
}

void refan_seed(RunConfig& rc) {
  rc.forest.seed = rc.seed;
  rc.nn.seed = rc.seed;
  rc.sgns.seed = rc.seed;
}

std::vector<std::string> read_text_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"sentence-level aggression / sentiment classification toolkit"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);

  // stats
  CommonOpts stats_opts;
  std::string stats_name;
  auto* stats_cmd = app.add_subcommand("stats", "corpus summary: classes, lengths, vocabulary");
  add_data_flags(stats_cmd, stats_opts);
  stage(stats_cmd, stats_opts, "--embeddings", "embeddings",
        "embedding table file; adds the words-in-model column");
  stats_cmd->add_option("--name", stats_name, "corpus name to print");

  // split
  CommonOpts split_opts;
  std::string split_train_out, split_eval_out;
  auto* split_cmd = app.add_subcommand("split", "deterministic stratified train/eval split");
  add_data_flags(split_cmd, split_opts);
  stage(split_cmd, split_opts, "--eval-fraction", "eval_fraction", "evaluation share, default 0.1");
  split_cmd->add_option("--train-out", split_train_out, "output TSV for the train part")->required();
  split_cmd->add_option("--eval-out", split_eval_out, "output TSV for the eval part")->required();

  // train-embeddings
  CommonOpts emb_opts;
  std::string emb_text_path, emb_out;
  auto* emb_cmd = app.add_subcommand("train-embeddings", "skip-gram negative-sampling trainer");
  add_data_flags(emb_cmd, emb_opts);
  emb_cmd->add_option("--text", emb_text_path, "plain text corpus, one sentence per line");
  stage(emb_cmd, emb_opts, "--dim", "sgns.dim", "vector dimensionality");
  stage(emb_cmd, emb_opts, "--window", "sgns.window", "max context window");
  stage(emb_cmd, emb_opts, "--negatives", "sgns.negatives", "negative samples per pair");
  stage(emb_cmd, emb_opts, "--epochs", "sgns.epochs", "training epochs");
  stage(emb_cmd, emb_opts, "--learning-rate", "sgns.learning_rate", "initial learning rate");
  stage(emb_cmd, emb_opts, "--subsample", "sgns.subsample", "frequent-word subsampling threshold");
  stage(emb_cmd, emb_opts, "--min-count", "sgns.min_count", "minimum word frequency");
  stage(emb_cmd, emb_opts, "--workers", "sgns.workers", "threads; >1 trades determinism for speed");
  emb_cmd->add_option("--out", emb_out, "output embedding table")->required();

  // nearest
  std::string nearest_table, nearest_word;
  int nearest_k = 10;
  auto* nearest_cmd = app.add_subcommand("nearest", "nearest words by cosine distance");
  nearest_cmd->add_option("--embeddings", nearest_table, "embedding table file")->required();
  nearest_cmd->add_option("--word", nearest_word, "query word")->required();
  nearest_cmd->add_option("-k,--k", nearest_k, "neighbor count")->capture_default_str();

  // featurize
  CommonOpts feat_opts;
  std::string feat_out;
  auto* feat_cmd = app.add_subcommand("featurize", "seed-lexicon distance features per sentence");
  add_data_flags(feat_cmd, feat_opts);
  stage(feat_cmd, feat_opts, "--embeddings", "embeddings", "embedding table file");
  stage(feat_cmd, feat_opts, "--lexicon", "lexicon", "seed lexicon, one word/phrase per line");
  feat_cmd->add_option("--out", feat_out, "output TSV (default: stdout)");

  // train
  CommonOpts train_opts;
  std::string train_model_out, train_metrics_out;
  int train_repeats = 1;
  auto* train_cmd = app.add_subcommand("train", "train a classifier and report held-out metrics");
  add_data_flags(train_cmd, train_opts);
  stage(train_cmd, train_opts, "--classifier", "classifier",
        "forest, word_cnn, pos_cnn or combined");
  stage(train_cmd, train_opts, "--embeddings", "embeddings",
        "embedding table file, 'train' to fit one on the train split, or 'none'");
  stage(train_cmd, train_opts, "--lexicon", "lexicon", "seed lexicon (forest)");
  stage(train_cmd, train_opts, "--eval-fraction", "eval_fraction", "evaluation share, default 0.1");
  stage(train_cmd, train_opts, "--trees", "forest.n_trees", "forest size");
  stage(train_cmd, train_opts, "--workers", "forest.workers", "forest training threads");
  stage(train_cmd, train_opts, "--epochs", "nn.epochs", "training epochs (CNN variants)");
  stage(train_cmd, train_opts, "--batch-size", "nn.batch_size", "mini-batch size");
  stage(train_cmd, train_opts, "--learning-rate", "nn.learning_rate", "Adam learning rate");
  stage(train_cmd, train_opts, "--dropout", "nn.dropout", "dropout rate before the output layer");
  stage(train_cmd, train_opts, "--max-len", "nn.max_len", "sentence length cap in tokens");
  train_cmd->add_option("--model-out", train_model_out, "save the trained model here");
  train_cmd->add_option("--out", train_metrics_out, "write metrics JSON here");
  train_cmd->add_option("--repeats", train_repeats, "run seeds seed..seed+k-1, report mean/stddev")
      ->capture_default_str();

  // eval
  CommonOpts eval_opts;
  std::string eval_model_path, eval_metrics_out;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a saved model on a labeled dataset");
  add_data_flags(eval_cmd, eval_opts);
  eval_cmd->add_option("--model", eval_model_path, "model file")->required();
  stage(eval_cmd, eval_opts, "--embeddings", "embeddings", "embedding table file (forest models)");
  stage(eval_cmd, eval_opts, "--classifier", "classifier", "expected classifier; mismatch is fatal");
  eval_cmd->add_option("--out", eval_metrics_out, "write metrics JSON here");

  // predict
  std::string pred_model_path, pred_text, pred_input, pred_table, pred_tag_lexicon;
  auto* pred_cmd = app.add_subcommand("predict", "classify raw sentences with a saved model");
  pred_cmd->add_option("--model", pred_model_path, "model file")->required();
  pred_cmd->add_option("--text", pred_text, "one sentence to classify");
  pred_cmd->add_option("--input", pred_input, "file of sentences, one per line");
  pred_cmd->add_option("--embeddings", pred_table, "embedding table file (forest models)");
  pred_cmd->add_option("--tag-lexicon", pred_tag_lexicon, "tagger override lexicon");

  // gradcheck
  std::string gc_variant = "all";
  double gc_epsilon = 1e-5, gc_tolerance = 1e-4;
  int gc_samples = 200;
  uint64_t gc_seed = 1;
  auto* gc_cmd = app.add_subcommand("gradcheck",
                                    "finite-difference check of the analytic gradients");
  gc_cmd->add_option("--variant", gc_variant, "word_cnn, pos_cnn, combined or all")
      ->capture_default_str();
  gc_cmd->add_option("--epsilon", gc_epsilon, "finite-difference step")->capture_default_str();
  gc_cmd->add_option("--samples", gc_samples, "sampled parameters per tensor")
      ->capture_default_str();
  gc_cmd->add_option("--tolerance", gc_tolerance, "max relative error allowed")
      ->capture_default_str();
  gc_cmd->add_option("--seed", gc_seed, "random seed")->capture_default_str();

  // synth
  int synth_n = 2000;
  uint64_t synth_seed = 1;
  std::string synth_dir;
  auto* synth_cmd = app.add_subcommand("synth", "generate the synthetic aggression dataset");
  synth_cmd->add_option("--n", synth_n, "number of sentences")->capture_default_str();
  synth_cmd->add_option("--seed", synth_seed, "random seed")->capture_default_str();
  synth_cmd->add_option("--out-dir", synth_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // 0 covers --help/--version
  }

  try {
    if (*stats_cmd) {
      RunConfig rc = stats_opts.resolve();
      LabeledDataset ds = load_dataset(rc);
      EmbeddingTable table;
      bool have_table = false;
      if (rc.embedding_source != "none") {
        table = require_table_file(rc.embedding_source, "stats");
        have_table = true;
      }
      const CorpusStats st = stats(ds, have_table ? &table : nullptr);
      const std::string name = stats_name.empty() ? short_name(ds.name) : stats_name;
      std::printf("corpus classes avg_words sentences unique_words words_in_model\n");
      std::printf("%s %d %d %lld %lld ", name.c_str(), st.n_classes, st.avg_sentence_length_rounded,
                  static_cast<long long>(st.n_sentences), static_cast<long long>(st.vocab_size));
      if (have_table) {
        std::printf("%lld\n", static_cast<long long>(st.vocab_in_model));
      } else {
        std::printf("-\n");
      }
    } else if (*split_cmd) {
      RunConfig rc = split_opts.resolve();
      LabeledDataset ds = load_dataset(rc);
      auto [train_ds, eval_ds] = split(ds, rc.eval_fraction, rc.seed);
      write_tsv(train_ds, split_train_out, rc.tagged_input);
      write_tsv(eval_ds, split_eval_out, rc.tagged_input);
      std::printf("train %zu %s\n", train_ds.size(), split_train_out.c_str());
      std::printf("eval %zu %s\n", eval_ds.size(), split_eval_out.c_str());
    } else if (*emb_cmd) {
      RunConfig rc = emb_opts.resolve();
      std::vector<std::vector<std::string>> corpus;
      if (!emb_text_path.empty()) {
        for (const std::string& line : read_text_lines(emb_text_path)) {
          std::vector<std::string> tokens = tokenize(line);
          if (!tokens.empty()) corpus.push_back(std::move(tokens));
        }
      } else {
        LabeledDataset ds = load_dataset(rc);
        for (Example& ex : ds.examples) corpus.push_back(std::move(ex.tokens));
      }
      SgnsReport report;
      EmbeddingTable table = train_sgns(corpus, rc.sgns, &report);
      for (size_t e = 0; e < report.epoch_loss.size(); ++e) {
        std::printf("epoch %zu/%zu loss %.4f\n", e + 1, report.epoch_loss.size(),
                    report.epoch_loss[e]);
      }
      std::printf("vocabulary %lld tokens %lld\n", static_cast<long long>(report.vocab_words),
                  static_cast<long long>(report.total_tokens));
      save_table(table, emb_out);
      std::printf("wrote %d vectors (dim %d) to %s\n", table.size(), table.dim(), emb_out.c_str());
    } else if (*nearest_cmd) {
      EmbeddingTable table = load_table(nearest_table);
      for (const auto& [word, dist] : nearest(table, nearest_word, nearest_k)) {
        std::printf("%s %.6f\n", word.c_str(), dist);
      }
    } else if (*feat_cmd) {
      RunConfig rc = feat_opts.resolve();
      if (rc.lexicon_path.empty()) fail("featurize needs --lexicon");
      LabeledDataset ds = load_dataset(rc);
      EmbeddingTable table = require_table_file(rc.embedding_source, "featurize");
      SeedLexicon lexicon = load_lexicon(rc.lexicon_path, table);
      if (!lexicon.skipped.empty()) {
        std::fprintf(stderr, "lexicon: %zu entries have no in-table word\n",
                     lexicon.skipped.size());
      }
      auto [features, labels] = featurize_dataset(ds, lexicon, table);
      std::ofstream file;
      if (!feat_out.empty()) {
        file.open(feat_out, std::ios::binary);
        if (!file) fail("cannot open output file: " + feat_out);
      }
      std::ostream& out = feat_out.empty() ? std::cout : file;
      out << "label";
      for (const std::string& name : kFeatureNames) out << '\t' << name;
      out << "\n";
      char buf[64];
      for (int r = 0; r < features.n_rows; ++r) {
        out << labels[static_cast<size_t>(r)];
        for (int c = 0; c < features.n_cols; ++c) {
          std::snprintf(buf, sizeof(buf), "%.9g", features.at(r, c));
          out << '\t' << buf;
        }
        out << "\n";
      }
      if (!out) fail("write failure on feature output");
    } else if (*train_cmd) {
      RunConfig rc = train_opts.resolve();
      if (train_repeats < 1) fail("--repeats must be >= 1");
      std::vector<double> accuracies;
      for (int r = 0; r < train_repeats; ++r) {
        RunConfig run = rc;
        run.seed = rc.seed + static_cast<uint64_t>(r);
        refan_seed(run);
        Metrics m = run_train_once(run, r == 0 ? train_model_out : std::string{});
        std::printf("%s\n", metrics_row(m).c_str());
        if (r == 0 && !train_metrics_out.empty()) write_metrics(m, train_metrics_out);
        accuracies.push_back(m.accuracy);
      }
      if (train_repeats > 1) {
        double mean = 0;
        for (double a : accuracies) mean += a;
        mean /= static_cast<double>(accuracies.size());
        double var = 0;
        for (double a : accuracies) var += (a - mean) * (a - mean);
        var /= static_cast<double>(accuracies.size() - 1);
        std::printf("repeats %d mean %.4f stddev %.4f\n", train_repeats, mean, std::sqrt(var));
      }
    } else if (*eval_cmd) {
      KeyValueConfig merged;
      RunConfig rc = eval_opts.resolve(&merged);
      const auto start = std::chrono::steady_clock::now();
      LoadedModel loaded = load_any_model(eval_model_path);
      const std::string actual = loaded.kind == ModelKind::forest
                                     ? "forest"
                                     : variant_name(loaded.cnn.cfg.variant);
      if (merged.has("classifier") && rc.classifier != actual) {
        fail("model file holds a " + actual + " model, but --classifier expects " + rc.classifier);
      }
      LabeledDataset ds = load_dataset(rc);
      Metrics m;
      if (loaded.kind == ModelKind::forest) {
        EmbeddingTable table = require_table_file(rc.embedding_source, "evaluating a forest model");
        if (table.dim() != loaded.lexicon.dim) {
          fail("embedding table dim " + std::to_string(table.dim()) +
               " does not match the model's lexicon dim " + std::to_string(loaded.lexicon.dim));
        }
        m = evaluate_forest(loaded.forest, loaded.lexicon, table, ds);
      } else {
        if (loaded.cnn.cfg.variant != Variant::word_cnn) ensure_tags(ds, rc);
        m = evaluate_cnn(loaded.cnn, ds);
      }
      m.task = "eval";
      m.fingerprint = loaded.fingerprint;
      m.wall_seconds = elapsed_seconds(start);
      std::printf("%s\n", metrics_row(m).c_str());
      if (!eval_metrics_out.empty()) write_metrics(m, eval_metrics_out);
    } else if (*pred_cmd) {
      if (pred_text.empty() && pred_input.empty()) fail("predict needs --text or --input");
      LoadedModel loaded = load_any_model(pred_model_path);
      EmbeddingTable table;
      if (loaded.kind == ModelKind::forest) {
        table = require_table_file(pred_table, "predicting with a forest model");
        if (table.dim() != loaded.lexicon.dim) {
          fail("embedding table dim " + std::to_string(table.dim()) +
               " does not match the model's lexicon dim " + std::to_string(loaded.lexicon.dim));
        }
      }
      PosTagger tagger;
      if (!pred_tag_lexicon.empty()) tagger.load_lexicon(pred_tag_lexicon);

      std::vector<std::string> sentences;
      if (!pred_text.empty()) sentences.push_back(pred_text);
      if (!pred_input.empty()) {
        for (std::string& line : read_text_lines(pred_input)) {
          if (!tokenize(line).empty()) sentences.push_back(std::move(line));
        }
      }
      for (const std::string& text : sentences) {
        Example ex;
        ex.text = text;
        ex.tokens = tokenize(text);
        if (ex.tokens.empty()) fail("cannot classify an empty sentence");
        if (loaded.kind == ModelKind::forest) {
          const FeatureVector fv = featurize_sentence(ex.tokens, loaded.lexicon, table);
          const auto arr = fv.as_array();
          const ForestVote vote = predict_forest(loaded.forest, arr);
          std::printf("label %d votes %d/%d\n", vote.label, vote.votes[static_cast<size_t>(vote.label)],
                      vote.votes[0] + vote.votes[1]);
        } else {
          if (loaded.cnn.cfg.variant != Variant::word_cnn) ex.pos_tags = tagger.tag(ex.tokens);
          const EncodedSentence enc =
              encode_for_model(loaded.cnn.cfg, loaded.cnn.vocab, loaded.cnn.tag_vocab, ex);
          const BatchResult<float> r =
              forward(loaded.cnn, std::span<const EncodedSentence>(&enc, 1), Mode::eval);
          std::printf("label %d prob %.4f\n", r.predicted[0],
                      r.probs[0][static_cast<size_t>(r.predicted[0])]);
        }
      }
    } else if (*gc_cmd) {
      std::vector<Variant> variants;
      if (gc_variant == "all") {
        variants = {Variant::word_cnn, Variant::pos_cnn, Variant::combined};
      } else {
        variants = {parse_variant(gc_variant)};
      }
      const SynthData sd = synth_aggression(60, gc_seed);
      const Vocabulary vocab = build_vocab(sd.data, 1);
      const Vocabulary tag_vocab = build_tag_vocab(sd.data);
      bool ok = true;
      for (Variant v : variants) {
        ModelConfig cfg;
        cfg.variant = v;
        cfg.word_dim = 16;
        cfg.pos_dim = 8;
        cfg.filter_widths = {2, 3};
        cfg.filters_per_width = 6;
        cfg.merge_hidden = 12;
        cfg.max_len = 32;
        cfg.seed = gc_seed;
        ModelT<double> model = ModelT<double>::init(cfg, vocab, tag_vocab, nullptr);
        std::vector<EncodedSentence> batch;
        std::vector<int> labels;
        for (int i = 0; i < 8; ++i) {
          batch.push_back(encode_for_model(cfg, vocab, tag_vocab, sd.data.examples[static_cast<size_t>(i)]));
          labels.push_back(sd.data.examples[static_cast<size_t>(i)].label);
        }
        const double err = grad_check(model, batch, labels, gc_epsilon, gc_samples, gc_seed);
        std::printf("%s max_rel_err %.3e (eps %.1e, %d samples/tensor)\n", variant_name(v), err,
                    gc_epsilon, gc_samples);
        if (!(err < gc_tolerance)) ok = false;
      }
      if (!ok) fail("gradient check exceeded tolerance");
    } else if (*synth_cmd) {
      const SynthData sd = synth_aggression(synth_n, synth_seed);
      std::filesystem::create_directories(synth_dir);
      const std::string data_path = synth_dir + "/data.tsv";
      const std::string table_path = synth_dir + "/embeddings.txt";
      const std::string lexicon_path = synth_dir + "/lexicon.txt";
      write_tsv(sd.data, data_path, true);
      save_table(sd.table, table_path);
      std::ofstream lex(lexicon_path, std::ios::binary);
      if (!lex) fail("cannot open output file: " + lexicon_path);
      lex << sd.lexicon_text;
      if (!lex) fail("write failure on " + lexicon_path);
      std::printf("wrote %zu sentences to %s\n", sd.data.size(), data_path.c_str());
      std::printf("wrote %d vectors (dim %d) to %s\n", sd.table.size(), sd.table.dim(),
                  table_path.c_str());
      std::printf("wrote seed lexicon to %s\n", lexicon_path.c_str());
    }
    return 0;
  } catch (const Error& e) {
    std::fflush(stdout);
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fflush(stdout);
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace sentclass
