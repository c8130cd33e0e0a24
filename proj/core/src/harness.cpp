#include "sentclass/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "sentclass/error.hpp"
#include "sentclass/rng.hpp"

namespace sentclass {

std::string version_string() {
#ifdef SENTCLASS_VERSION
  return std::string("sentclass ") + SENTCLASS_VERSION;
#else
  return "sentclass 0.0.0-dev";
#endif
}

namespace {

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void KeyValueConfig::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open config file: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      fail(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(stripped).substr(0, eq));
    const std::string value = trim(std::string_view(stripped).substr(eq + 1));
    if (key.empty()) fail(path + ":" + std::to_string(lineno) + ": empty config key");
    values_[key] = value;
  }
}

void KeyValueConfig::set(const std::string& key, const std::string& value) { values_[key] = value; }

bool KeyValueConfig::has(const std::string& key) const { return values_.count(key) != 0; }

std::string KeyValueConfig::get(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

int64_t KeyValueConfig::get_int(const std::string& key, int64_t fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  int64_t out = 0;
  const char* first = it->second.data();
  const char* last = first + it->second.size();
  auto [p, ec] = std::from_chars(first, last, out);
  if (ec != std::errc{} || p != last) {
    fail("config key '" + key + "': not an integer: '" + it->second + "'");
  }
  return out;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  double out = 0;
  const char* first = it->second.data();
  const char* last = first + it->second.size();
  auto [p, ec] = std::from_chars(first, last, out);
  if (ec != std::errc{} || p != last) {
    fail("config key '" + key + "': not a number: '" + it->second + "'");
  }
  return out;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail("config key '" + key + "': not a boolean: '" + v + "'");
}

namespace {

std::vector<int> parse_width_list(const std::string& text) {
  std::vector<int> widths;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    std::istringstream part(item);
    int w = 0;
    while (part >> w) widths.push_back(w);
    if (!part.eof()) fail("bad filter width list: '" + text + "'");
  }
  if (widths.empty()) fail("bad filter width list: '" + text + "'");
  return widths;
}

std::string join_widths(const std::vector<int>& widths) {
  std::string out;
  for (size_t i = 0; i < widths.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(widths[i]);
  }
  return out;
}

}  // namespace

void RunConfig::apply(const KeyValueConfig& kv) {
  for (const auto& [key, value] : kv.entries()) {
    if (key == "task") task = value;
    else if (key == "format") format = value;
    else if (key == "dataset") dataset_path = value;
    else if (key == "pos") pos_path = value;
    else if (key == "neg") neg_path = value;
    else if (key == "tagged") tagged_input = kv.get_bool(key, tagged_input);
    else if (key == "classifier") classifier = value;
    else if (key == "embeddings") embedding_source = value;
    else if (key == "lexicon") lexicon_path = value;
    else if (key == "tag_lexicon") tag_lexicon_path = value;
    else if (key == "eval_fraction") eval_fraction = kv.get_double(key, eval_fraction);
    else if (key == "seed") seed = static_cast<uint64_t>(kv.get_int(key, static_cast<int64_t>(seed)));
    else if (key == "forest.n_trees") forest.n_trees = static_cast<int>(kv.get_int(key, forest.n_trees));
    else if (key == "forest.max_depth") forest.max_depth = static_cast<int>(kv.get_int(key, forest.max_depth));
    else if (key == "forest.min_samples_leaf") forest.min_samples_leaf = static_cast<int>(kv.get_int(key, forest.min_samples_leaf));
    else if (key == "forest.features_per_split") forest.features_per_split = static_cast<int>(kv.get_int(key, forest.features_per_split));
    else if (key == "forest.workers") forest.workers = static_cast<int>(kv.get_int(key, forest.workers));
    else if (key == "nn.word_dim") nn.word_dim = static_cast<int>(kv.get_int(key, nn.word_dim));
    else if (key == "nn.pos_dim") nn.pos_dim = static_cast<int>(kv.get_int(key, nn.pos_dim));
    else if (key == "nn.filter_widths") nn.filter_widths = parse_width_list(value);
    else if (key == "nn.filters_per_width") nn.filters_per_width = static_cast<int>(kv.get_int(key, nn.filters_per_width));
    else if (key == "nn.merge_hidden") nn.merge_hidden = static_cast<int>(kv.get_int(key, nn.merge_hidden));
    else if (key == "nn.dropout") nn.dropout = kv.get_double(key, nn.dropout);
    else if (key == "nn.max_len") nn.max_len = static_cast<int>(kv.get_int(key, nn.max_len));
    else if (key == "nn.learning_rate") nn.learning_rate = kv.get_double(key, nn.learning_rate);
    else if (key == "nn.batch_size") nn.batch_size = static_cast<int>(kv.get_int(key, nn.batch_size));
    else if (key == "nn.epochs") nn.epochs = static_cast<int>(kv.get_int(key, nn.epochs));
    else if (key == "nn.vocab_min_count") nn.vocab_min_count = static_cast<int>(kv.get_int(key, nn.vocab_min_count));
    else if (key == "nn.train_word_embeddings") nn.train_word_embeddings = kv.get_bool(key, nn.train_word_embeddings);
    else if (key == "sgns.dim") sgns.dim = static_cast<int>(kv.get_int(key, sgns.dim));
    else if (key == "sgns.window") sgns.window = static_cast<int>(kv.get_int(key, sgns.window));
    else if (key == "sgns.negatives") sgns.negatives = static_cast<int>(kv.get_int(key, sgns.negatives));
    else if (key == "sgns.epochs") sgns.epochs = static_cast<int>(kv.get_int(key, sgns.epochs));
    else if (key == "sgns.learning_rate") sgns.learning_rate = kv.get_double(key, sgns.learning_rate);
    else if (key == "sgns.min_learning_rate") sgns.min_learning_rate = kv.get_double(key, sgns.min_learning_rate);
    else if (key == "sgns.subsample") sgns.subsample = kv.get_double(key, sgns.subsample);
    else if (key == "sgns.min_count") sgns.min_count = static_cast<int>(kv.get_int(key, sgns.min_count));
    else if (key == "sgns.workers") sgns.workers = static_cast<int>(kv.get_int(key, sgns.workers));
    else fail("unknown config key: '" + key + "'");
  }
  // one global seed; modules pull named substreams from it
  forest.seed = seed;
  nn.seed = seed;
  sgns.seed = seed;
}

void RunConfig::validate() const {
  if (format != "tsv" && format != "polarity") {
    fail("unknown dataset format '" + format + "' (expected tsv or polarity)");
  }
  if (classifier != "forest") parse_variant(classifier);  // throws on anything unknown
  if (classifier == "forest") {
    if (lexicon_path.empty()) fail("forest classifier requires a seed lexicon (--lexicon)");
    if (embedding_source == "none") {
      fail("forest classifier requires embeddings (--embeddings <table> or --embeddings train)");
    }
  }
  if (!(eval_fraction > 0.0 && eval_fraction < 1.0)) {
    fail("eval fraction must be in (0, 1)");
  }
}

std::string RunConfig::canonical() const {
  std::map<std::string, std::string> kv;
  kv["task"] = task;
  kv["format"] = format;
  kv["dataset"] = dataset_path;
  kv["pos"] = pos_path;
  kv["neg"] = neg_path;
  kv["tagged"] = tagged_input ? "true" : "false";
  kv["classifier"] = classifier;
  kv["embeddings"] = embedding_source;
  kv["lexicon"] = lexicon_path;
  kv["tag_lexicon"] = tag_lexicon_path;
  kv["eval_fraction"] = format_real(eval_fraction);
  kv["seed"] = std::to_string(seed);
  kv["forest.n_trees"] = std::to_string(forest.n_trees);
  kv["forest.max_depth"] = std::to_string(forest.max_depth);
  kv["forest.min_samples_leaf"] = std::to_string(forest.min_samples_leaf);
  kv["forest.features_per_split"] = std::to_string(forest.features_per_split);
  kv["nn.word_dim"] = std::to_string(nn.word_dim);
  kv["nn.pos_dim"] = std::to_string(nn.pos_dim);
  kv["nn.filter_widths"] = join_widths(nn.filter_widths);
  kv["nn.filters_per_width"] = std::to_string(nn.filters_per_width);
  kv["nn.merge_hidden"] = std::to_string(nn.merge_hidden);
  kv["nn.dropout"] = format_real(nn.dropout);
  kv["nn.max_len"] = std::to_string(nn.max_len);
  kv["nn.learning_rate"] = format_real(nn.learning_rate);
  kv["nn.batch_size"] = std::to_string(nn.batch_size);
  kv["nn.epochs"] = std::to_string(nn.epochs);
  kv["nn.vocab_min_count"] = std::to_string(nn.vocab_min_count);
  kv["nn.train_word_embeddings"] = nn.train_word_embeddings ? "true" : "false";
  kv["sgns.dim"] = std::to_string(sgns.dim);
  kv["sgns.window"] = std::to_string(sgns.window);
  kv["sgns.negatives"] = std::to_string(sgns.negatives);
  kv["sgns.epochs"] = std::to_string(sgns.epochs);
  kv["sgns.learning_rate"] = format_real(sgns.learning_rate);
  kv["sgns.min_learning_rate"] = format_real(sgns.min_learning_rate);
  kv["sgns.subsample"] = format_real(sgns.subsample);
  kv["sgns.min_count"] = std::to_string(sgns.min_count);
  // worker counts are excluded: results must not depend on them
  std::string out;
  for (const auto& [key, value] : kv) {
    out += key;
    out += " = ";
    out += value;
    out += "\n";
  }
  return out;
}

std::string config_fingerprint(const RunConfig& config) {
  const std::string text = version_string() + "\n" + config.canonical();
  uint64_t h = 0xcbf29ce484222325ULL;  // fnv-1a
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Metrics compute_metrics(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.empty()) fail("compute_metrics: empty evaluation set");
  if (truth.size() != predicted.size()) fail("compute_metrics: truth/prediction size mismatch");
  Metrics m;
  for (size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i];
    const int p = predicted[i];
    if (t < 0 || t > 1 || p < 0 || p > 1) fail("compute_metrics: label out of range");
    m.confusion[static_cast<size_t>(t)][static_cast<size_t>(p)] += 1;
  }
  m.n_eval = static_cast<int64_t>(truth.size());
  m.accuracy = static_cast<double>(m.confusion[0][0] + m.confusion[1][1]) /
               static_cast<double>(m.n_eval);
  for (size_t k = 0; k < 2; ++k) {
    const int64_t col = m.confusion[0][k] + m.confusion[1][k];
    const int64_t row = m.confusion[k][0] + m.confusion[k][1];
    m.precision[k] = col == 0 ? 0.0 : static_cast<double>(m.confusion[k][k]) / static_cast<double>(col);
    m.recall[k] = row == 0 ? 0.0 : static_cast<double>(m.confusion[k][k]) / static_cast<double>(row);
  }
  return m;
}

namespace {

// six fixed decimals; keeps the JSON byte-stable without dragging in locale
double round6(double v) { return std::round(v * 1e6) / 1e6; }

}  // namespace

std::string metrics_json(const Metrics& metrics) {
  nlohmann::json doc;
  doc["accuracy"] = round6(metrics.accuracy);
  doc["classifier"] = metrics.classifier;
  doc["confusion"] = {{metrics.confusion[0][0], metrics.confusion[0][1]},
                      {metrics.confusion[1][0], metrics.confusion[1][1]}};
  doc["fingerprint"] = metrics.fingerprint;
  doc["n_eval"] = metrics.n_eval;
  doc["precision"] = {round6(metrics.precision[0]), round6(metrics.precision[1])};
  doc["recall"] = {round6(metrics.recall[0]), round6(metrics.recall[1])};
  doc["task"] = metrics.task;
  return doc.dump(2) + "\n";
}

void write_metrics(const Metrics& metrics, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot open metrics file for writing: " + path);
  out << metrics_json(metrics);
  if (!out) fail("write failure on metrics file: " + path);
}

std::string metrics_row(const Metrics& metrics) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "%s %s accuracy %.4f precision %.4f/%.4f recall %.4f/%.4f n_eval %lld wall %.2fs",
                metrics.task.c_str(), metrics.classifier.c_str(), metrics.accuracy,
                metrics.precision[0], metrics.precision[1], metrics.recall[0], metrics.recall[1],
                static_cast<long long>(metrics.n_eval), metrics.wall_seconds);
  return buf;
}

Metrics evaluate_cnn(const Model& model, const LabeledDataset& eval) {
  if (eval.empty()) fail("evaluate: empty evaluation set");
  std::vector<EncodedSentence> encoded;
  encoded.reserve(eval.size());
  std::vector<int> truth;
  truth.reserve(eval.size());
  for (size_t i = 0; i < eval.size(); ++i) {
    try {
      encoded.push_back(encode_for_model(model.cfg, model.vocab, model.tag_vocab, eval.examples[i]));
    } catch (const Error& e) {
      fail("eval example " + std::to_string(i) + ": " + e.what());
    }
    truth.push_back(eval.examples[i].label);
  }
  std::vector<int> predicted;
  predicted.reserve(encoded.size());
  const size_t chunk = static_cast<size_t>(std::max(1, model.cfg.batch_size));
  for (size_t start = 0; start < encoded.size(); start += chunk) {
    const size_t count = std::min(encoded.size() - start, chunk);
    BatchResult<float> r =
        forward(model, std::span<const EncodedSentence>(encoded.data() + start, count), Mode::eval);
    predicted.insert(predicted.end(), r.predicted.begin(), r.predicted.end());
  }
  Metrics m = compute_metrics(truth, predicted);
  m.classifier = variant_name(model.cfg.variant);
  return m;
}

Metrics evaluate_forest(const Forest& forest, const SeedLexicon& lexicon,
                        const EmbeddingTable& table, const LabeledDataset& eval) {
  if (eval.empty()) fail("evaluate: empty evaluation set");
  auto [features, truth] = featurize_dataset(eval, lexicon, table);
  std::vector<int> predicted;
  predicted.reserve(truth.size());
  for (int r = 0; r < features.n_rows; ++r) {
    predicted.push_back(
        predict_forest(forest, std::span<const double>(features.row(r), static_cast<size_t>(features.n_cols)))
            .label);
  }
  Metrics m = compute_metrics(truth, predicted);
  m.classifier = "forest";
  return m;
}

namespace {

constexpr const char* kModelMagic = "sentclass model 1";

void write_lexicon_block(std::ostream& out, const SeedLexicon& lexicon) {
  out << "lexicon " << lexicon.entries.size() << ' ' << lexicon.dim << "\n";
  char buf[64];
  for (const LexiconEntry& entry : lexicon.entries) {
    for (float v : entry.vec) {
      std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
      out << buf << ' ';
    }
    out << entry.surface << "\n";
  }
}

SeedLexicon read_lexicon_block(std::istream& in, const std::string& path) {
  std::string key;
  size_t count = 0;
  int dim = 0;
  if (!(in >> key >> count >> dim) || key != "lexicon" || dim <= 0) {
    fail(path + ": expected lexicon block in forest model");
  }
  SeedLexicon lexicon;
  lexicon.dim = dim;
  for (size_t i = 0; i < count; ++i) {
    LexiconEntry entry;
    entry.vec.resize(static_cast<size_t>(dim));
    for (int j = 0; j < dim; ++j) {
      if (!(in >> entry.vec[static_cast<size_t>(j)])) {
        fail(path + ": truncated lexicon entry " + std::to_string(i));
      }
    }
    std::getline(in, entry.surface);
    entry.surface = trim(entry.surface);
    if (entry.surface.empty()) fail(path + ": lexicon entry " + std::to_string(i) + " has no surface form");
    lexicon.entries.push_back(std::move(entry));
  }
  return lexicon;
}

}  // namespace

void save_forest_model(const std::string& path, const Forest& forest, const SeedLexicon& lexicon,
                       const std::string& fingerprint) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot open model file for writing: " + path);
  out << kModelMagic << "\n";
  out << "type forest\n";
  out << "fingerprint " << fingerprint << "\n";
  write_lexicon_block(out, lexicon);
  save_forest(forest, out);
  if (!out) fail("write failure on model file: " + path);
}

void save_cnn_model(const std::string& path, const Model& model, const std::string& fingerprint) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot open model file for writing: " + path);
  out << kModelMagic << "\n";
  out << "type cnn\n";
  out << "fingerprint " << fingerprint << "\n";
  save_cnn(model, out);
  if (!out) fail("write failure on model file: " + path);
}

LoadedModel load_any_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open model file: " + path);
  std::string line;
  if (!std::getline(in, line)) fail(path + ": empty model file");
  if (line != kModelMagic) {
    if (line.rfind("sentclass model ", 0) == 0) {
      fail(path + ": unsupported model file version '" + line + "'");
    }
    fail(path + ": not a model file (bad header)");
  }
  std::string key, type;
  if (!(in >> key >> type) || key != "type") fail(path + ": missing model type tag");
  LoadedModel loaded;
  if (!(in >> key >> loaded.fingerprint) || key != "fingerprint") {
    fail(path + ": missing fingerprint");
  }
  if (type == "forest") {
    loaded.kind = ModelKind::forest;
    loaded.lexicon = read_lexicon_block(in, path);
    loaded.forest = load_forest(in);
  } else if (type == "cnn") {
    loaded.kind = ModelKind::cnn;
    in >> std::ws;
    loaded.cnn = load_cnn(in);
  } else {
    fail(path + ": unknown model type '" + type + "'");
  }
  return loaded;
}

}  // namespace sentclass
