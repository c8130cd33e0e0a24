#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sentclass/text.hpp"

namespace sentclass {

// word -> dense vector, fixed dimensionality. Immutable after load/train.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(int dim = 0) : dim_(dim) {}

  int dim() const { return dim_; }
  int size() const { return static_cast<int>(words_.size()); }
  bool contains(const std::string& word) const { return index_.count(word) != 0; }
  const std::vector<float>* find(const std::string& word) const;
  void insert(const std::string& word, std::vector<float> vec);  // duplicate word: last wins
  const std::string& word(int i) const { return words_[static_cast<size_t>(i)]; }
  const std::vector<float>& vector_at(int i) const { return vectors_[static_cast<size_t>(i)]; }

 private:
  int dim_;
  std::vector<std::string> words_;          // insertion order, kept for stable output
  std::vector<std::vector<float>> vectors_;
  std::unordered_map<std::string, int> index_;
};

// Text format: optional `<count> <dim>` header, then `word v1 .. v_dim` rows.
EmbeddingTable load_table(const std::string& path);
void save_table(const EmbeddingTable& table, const std::string& path);

// 1 - cos(u, v), in [0, 2]. Either vector all-zero -> 1 (maximal ignorance).
double cosine_distance(std::span<const float> u, std::span<const float> v);

// k nearest words by cosine distance, query excluded, ties lexicographic.
std::vector<std::pair<std::string, double>> nearest(const EmbeddingTable& table,
                                                    const std::string& word, int k);

// |vocab| x dim, row-major. Row 0 (PAD) is all-zero and must stay so.
struct EmbeddingMatrix {
  int rows = 0;
  int dim = 0;
  std::vector<float> values;
  bool trainable = true;

  std::span<float> row(int r) { return {values.data() + static_cast<size_t>(r) * dim, static_cast<size_t>(dim)}; }
  std::span<const float> row(int r) const {
    return {values.data() + static_cast<size_t>(r) * dim, static_cast<size_t>(dim)};
  }
};

// Pretrained rows copied bit-exact; everything else (incl. UNK) i.i.d.
// uniform in [-0.25, 0.25]. table == nullptr gives the all-random init.
EmbeddingMatrix init_for_vocab(const EmbeddingTable* table, const Vocabulary& vocab,
                               int dim, uint64_t seed);

struct SgnsConfig {
  int dim = 100;
  int window = 5;       // dynamic: actual window uniform in 1..window
  int negatives = 5;
  int epochs = 5;
  double learning_rate = 0.025;      // linearly decayed
  double min_learning_rate = 1e-4;
  double subsample = 1e-3;           // 0 disables
  int min_count = 5;
  uint64_t seed = 1;
  int workers = 1;  // 1 = strict (bit-deterministic); >1 = racy hogwild updates
};

struct SgnsReport {
  std::vector<double> epoch_loss;  // mean per-pair loss, one entry per epoch
  int64_t vocab_words = 0;
  int64_t total_tokens = 0;
};

// Skip-gram with negative sampling over tokenized sentences. Negatives come
// from the unigram distribution raised to 3/4. Returns the input vectors.
EmbeddingTable train_sgns(const std::vector<std::vector<std::string>>& corpus,
                          const SgnsConfig& config, SgnsReport* report = nullptr);

}  // namespace sentclass
