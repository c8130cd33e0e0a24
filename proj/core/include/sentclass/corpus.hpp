#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace sentclass {

class EmbeddingTable;

// One labeled sentence. tokens/pos_tags are filled by the text module (or by
// the tagged TSV loader); when pos_tags is non-empty it is token-aligned.
struct Example {
  std::string text;
  std::vector<std::string> tokens;
  std::vector<std::string> pos_tags;
  int label = 0;  // 0 = negative / non-aggressive, 1 = positive / aggressive
};

struct LabeledDataset {
  std::vector<Example> examples;
  std::string name;
  std::array<std::string, 2> class_names{"negative", "positive"};

  size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }
};

struct CorpusStats {
  int n_classes = 2;
  double avg_sentence_length = 0.0;  // exact mean token count
  int avg_sentence_length_rounded = 0;
  int64_t n_sentences = 0;
  int64_t vocab_size = 0;
  int64_t vocab_in_model = 0;  // 0 when no embedding table given
};

// Pang & Lee layout: one file per class, one sentence per line. Positives
// first, then negatives; empty lines skipped; invalid UTF-8 bytes replaced.
LabeledDataset load_polarity_pair(const std::string& pos_path, const std::string& neg_path);

// `label<TAB>text`, label in {0,1}. With tagged=true every token is word_TAG
// and tags are split out (word lowercased, tag kept as written).
LabeledDataset load_tsv(const std::string& path, bool tagged);

void write_tsv(const LabeledDataset& dataset, const std::string& path, bool tagged);

// Deterministic stratified split; eval gets round(n * eval_fraction) examples.
std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& dataset,
                                                double eval_fraction, uint64_t seed);

CorpusStats stats(const LabeledDataset& dataset, const EmbeddingTable* table = nullptr);

}  // namespace sentclass
