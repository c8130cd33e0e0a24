#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sentclass/corpus.hpp"
#include "sentclass/embeddings.hpp"
#include "sentclass/features.hpp"
#include "sentclass/forest.hpp"
#include "sentclass/nn.hpp"

namespace sentclass {

std::string version_string();

// Flat `key = value` config with section prefixes (`forest.n_trees = 100`).
// `#` starts a comment; CLI flags override file values.
class KeyValueConfig {
 public:
  void load_file(const std::string& path);
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;
  std::string get(const std::string& key, const std::string& fallback = "") const;
  int64_t get_int(const std::string& key, int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

struct RunConfig {
  std::string task = "run";
  std::string format = "tsv";  // "tsv" | "polarity"
  std::string dataset_path;    // tsv format
  std::string pos_path, neg_path;  // polarity format
  bool tagged_input = false;
  std::string classifier = "forest";  // forest | word_cnn | pos_cnn | combined
  std::string embedding_source = "none";  // "none" | "train" | a table path
  std::string lexicon_path;
  std::string tag_lexicon_path;
  double eval_fraction = 0.1;
  uint64_t seed = 1;
  ForestConfig forest;
  ModelConfig nn;
  SgnsConfig sgns;

  void apply(const KeyValueConfig& kv);  // file/flag values onto defaults
  void validate() const;                 // classifier-specific requirements
  std::string canonical() const;         // sorted key=value dump, one per line
};

std::string config_fingerprint(const RunConfig& config);

struct Metrics {
  double accuracy = 0;
  std::array<double, 2> precision{0, 0};
  std::array<double, 2> recall{0, 0};
  std::array<std::array<int64_t, 2>, 2> confusion{{{0, 0}, {0, 0}}};  // [truth][predicted]
  int64_t n_eval = 0;
  std::string fingerprint;
  std::string classifier;
  std::string task;
  double wall_seconds = 0;  // reported on stdout; kept out of the JSON file
};

Metrics compute_metrics(std::span<const int> truth, std::span<const int> predicted);

// Sorted keys, fixed float formatting; byte-identical across identical runs.
std::string metrics_json(const Metrics& metrics);
void write_metrics(const Metrics& metrics, const std::string& path);
std::string metrics_row(const Metrics& metrics);  // one-line stdout summary

Metrics evaluate_cnn(const Model& model, const LabeledDataset& eval);
Metrics evaluate_forest(const Forest& forest, const SeedLexicon& lexicon,
                        const EmbeddingTable& table, const LabeledDataset& eval);

// Synthetic stand-in for the unavailable imageboard corpora: two embedding
// clusters, class-skewed token draws, class-distinct POS bigram patterns.
struct SynthData {
  LabeledDataset data;        // tokenized and tagged
  EmbeddingTable table;
  std::string lexicon_text;   // 10 aggressive seed tokens, one per line
};

SynthData synth_aggression(int n_sentences, uint64_t seed);

// Versioned model files with a type tag and an embedded fingerprint.
enum class ModelKind { forest, cnn };

struct LoadedModel {
  ModelKind kind = ModelKind::forest;
  Forest forest;
  SeedLexicon lexicon;  // forest models carry their seed lexicon
  Model cnn;
  std::string fingerprint;
};

void save_forest_model(const std::string& path, const Forest& forest,
                       const SeedLexicon& lexicon, const std::string& fingerprint);
void save_cnn_model(const std::string& path, const Model& model, const std::string& fingerprint);
LoadedModel load_any_model(const std::string& path);

int run_cli(int argc, const char* const* argv);

}  // namespace sentclass
