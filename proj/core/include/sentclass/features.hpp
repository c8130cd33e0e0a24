#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "sentclass/corpus.hpp"
#include "sentclass/embeddings.hpp"

namespace sentclass {

struct LexiconEntry {
  std::string surface;     // word or multi-word phrase as written
  std::vector<float> vec;  // mean of the in-table word vectors
};

// The seed set of aggressive (or sentiment) words and phrases, resolved
// against an embedding table.
struct SeedLexicon {
  std::vector<LexiconEntry> entries;
  std::vector<std::string> skipped;  // no in-table word at all
  int dim = 0;
};

// Per-sentence distance features: sum, mean and max-min of the per-token
// seed distances, plus the token count.
struct FeatureVector {
  double sum_dist = 0;
  double mean_dist = 0;
  double range_dist = 0;
  double length = 0;

  std::array<double, 4> as_array() const { return {sum_dist, mean_dist, range_dist, length}; }
};

inline const std::array<std::string, 4> kFeatureNames{"sum_dist", "mean_dist", "range_dist", "length"};

// Plain row-major matrix of real features.
struct FeatureMatrix {
  std::vector<double> values;
  int n_rows = 0;
  int n_cols = 0;

  double at(int r, int c) const { return values[static_cast<size_t>(r) * n_cols + c]; }
  const double* row(int r) const { return values.data() + static_cast<size_t>(r) * n_cols; }
};

// One entry per non-comment line; `#` lines and blanks skipped. Fatal when
// every entry is out of table.
SeedLexicon load_lexicon(const std::string& path, const EmbeddingTable& table);
SeedLexicon build_lexicon(const std::vector<std::string>& lines, const EmbeddingTable& table,
                          const std::string& origin = "<memory>");

// min over seed entries of cosine_distance; out-of-table word -> 1.
double word_distance(const std::string& word, const SeedLexicon& lexicon,
                     const EmbeddingTable& table);

FeatureVector featurize_sentence(const std::vector<std::string>& tokens,
                                 const SeedLexicon& lexicon, const EmbeddingTable& table);

// n x 4 matrix, row order = dataset order.
std::pair<FeatureMatrix, std::vector<int>> featurize_dataset(const LabeledDataset& dataset,
                                                             const SeedLexicon& lexicon,
                                                             const EmbeddingTable& table);

}  // namespace sentclass
