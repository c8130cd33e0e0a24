#pragma once

#include <array>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sentclass/corpus.hpp"

namespace sentclass {

// Index 0 and 1 are reserved; corpus tokens start at 2.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  Vocabulary();

  int add(const std::string& token);             // appends, returns its index
  int lookup(const std::string& token) const;    // kUnk when absent
  bool contains(const std::string& token) const;
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::string& token(int index) const { return tokens_[static_cast<size_t>(index)]; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// Fixed-length integer encoding of one sentence.
struct EncodedSentence {
  std::vector<int> indices;      // length max_len, PAD beyond true_length
  int true_length = 0;
  std::vector<int> pos_indices;  // empty, or length max_len
};

// Lowercases ASCII, splits on whitespace, peels leading/trailing punctuation
// into standalone tokens (runs of 3+ identical marks collapse to 2), keeps
// internal apostrophes and hyphens. Bytes >= 0x80 pass through untouched.
std::vector<std::string> tokenize(std::string_view raw);

// Fills Example::tokens wherever it is still empty.
void tokenize_dataset(LabeledDataset& dataset);

// Tokens with frequency >= min_count, ordered by descending frequency then
// lexicographically, get indices from 2 upward.
Vocabulary build_vocab(const LabeledDataset& dataset, int min_count);

// Same ordering rule over pos_tags.
Vocabulary build_tag_vocab(const LabeledDataset& dataset);

// Rule/lexicon fallback tagger over the 12-tag universal set. An external
// `word<TAB>TAG` lexicon file overrides everything else.
class PosTagger {
 public:
  PosTagger();

  void load_lexicon(const std::string& path);

  std::string tag(const std::string& token) const;
  std::vector<std::string> tag(const std::vector<std::string>& tokens) const;

  static const std::array<std::string, 12>& tagset();

 private:
  std::unordered_map<std::string, std::string> overrides_;
};

// Fills Example::pos_tags wherever it is still empty (tags from tagged input
// take precedence by construction).
void tag_dataset(LabeledDataset& dataset, const PosTagger& tagger);

// OOV -> UNK, truncate to max_len, pad with PAD. true_length is raised to
// min_len (the largest filter width) so every filter sees at least one
// window. Throws on an empty token sequence.
EncodedSentence encode(const std::vector<std::string>& tokens,
                       const std::vector<std::string>* pos_tags,
                       const Vocabulary& vocab, const Vocabulary* tag_vocab,
                       int max_len, int min_len = 1);

}  // namespace sentclass
