#include "sentclass/features.hpp"

#include <algorithm>
#include <fstream>
#include <limits>

#include "sentclass/error.hpp"
#include "sentclass/text.hpp"

namespace sentclass {

SeedLexicon build_lexicon(const std::vector<std::string>& lines, const EmbeddingTable& table,
                          const std::string& origin) {
  SeedLexicon lex;
  lex.dim = table.dim();
  for (const std::string& raw : lines) {
    std::string line = raw;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    size_t b = line.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    size_t e = line.find_last_not_of(" \t");
    line = line.substr(b, e - b + 1);
    if (line.empty() || line[0] == '#') continue;

    // phrase vector = mean of its in-table word vectors
    std::vector<std::string> words = tokenize(line);
    std::vector<double> sum(static_cast<size_t>(table.dim()), 0.0);
    int found = 0;
    for (const std::string& w : words) {
      if (const std::vector<float>* v = table.find(w)) {
        for (size_t j = 0; j < sum.size(); ++j) sum[j] += (*v)[j];
        ++found;
      }
    }
    if (found == 0) {
      lex.skipped.push_back(line);
      continue;
    }
    LexiconEntry entry;
    entry.surface = line;
    entry.vec.resize(sum.size());
    for (size_t j = 0; j < sum.size(); ++j) {
      entry.vec[j] = static_cast<float>(sum[j] / found);
    }
    lex.entries.push_back(std::move(entry));
  }
  if (lex.entries.empty()) {
    fail(origin + ": lexicon disjoint from embedding model (every entry skipped)");
  }
  return lex;
}

SeedLexicon load_lexicon(const std::string& path, const EmbeddingTable& table) {
  std::ifstream in(path);
  if (!in) fail("cannot open lexicon " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return build_lexicon(lines, table, path);
}

double word_distance(const std::string& word, const SeedLexicon& lexicon,
                     const EmbeddingTable& table) {
  const std::vector<float>* v = table.find(word);
  if (v == nullptr) return 1.0;  // out of table: neutral
  double best = std::numeric_limits<double>::infinity();
  for (const LexiconEntry& entry : lexicon.entries) {
    best = std::min(best, cosine_distance(*v, entry.vec));
  }
  return best;
}

FeatureVector featurize_sentence(const std::vector<std::string>& tokens,
                                 const SeedLexicon& lexicon, const EmbeddingTable& table) {
  if (tokens.empty()) fail("featurize_sentence: empty token sequence");
  FeatureVector f;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const std::string& t : tokens) {
    double d = word_distance(t, lexicon, table);
    f.sum_dist += d;
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  f.length = static_cast<double>(tokens.size());
  f.mean_dist = f.sum_dist / f.length;
  f.range_dist = hi - lo;
  return f;
}

std::pair<FeatureMatrix, std::vector<int>> featurize_dataset(const LabeledDataset& dataset,
                                                             const SeedLexicon& lexicon,
                                                             const EmbeddingTable& table) {
  FeatureMatrix m;
  m.n_rows = static_cast<int>(dataset.size());
  m.n_cols = 4;
  m.values.reserve(static_cast<size_t>(m.n_rows) * 4);
  std::vector<int> labels;
  labels.reserve(dataset.size());
  for (size_t i = 0; i < dataset.size(); ++i) {
    const Example& ex = dataset.examples[i];
    try {
      FeatureVector f = featurize_sentence(ex.tokens, lexicon, table);
      auto arr = f.as_array();
      m.values.insert(m.values.end(), arr.begin(), arr.end());
    } catch (const Error& e) {
      fail("example " + std::to_string(i) + ": " + e.what());
    }
    labels.push_back(ex.label);
  }
  return {std::move(m), std::move(labels)};
}

}  // namespace sentclass
