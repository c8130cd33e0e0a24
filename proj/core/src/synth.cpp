#include <array>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "sentclass/error.hpp"
#include "sentclass/harness.hpp"
#include "sentclass/rng.hpp"

namespace sentclass {

namespace {

constexpr int kDim = 50;
constexpr int kTokensPerClass = 200;

std::vector<float> unit_gauss(std::mt19937_64& rng) {
  std::vector<float> v(kDim);
  double norm = 0;
  for (float& x : v) {
    const double g = gauss(rng);
    x = static_cast<float>(g);
    norm += g * g;
  }
  norm = std::sqrt(norm);
  for (float& x : v) x = static_cast<float>(x / norm);
  return v;
}

// center + noise, renormalized; redrawn until within ~26 degrees of the
// center. With antipodal centers that pins every cross-cluster pair past 128
// degrees, i.e. cosine distance > 1.6.
std::vector<float> cluster_vector(const std::vector<float>& center, double sign,
                                  std::mt19937_64& rng) {
  while (true) {
    std::vector<float> v(kDim);
    double norm = 0;
    for (int j = 0; j < kDim; ++j) {
      const double x = sign * center[static_cast<size_t>(j)] + 0.05 * gauss(rng);
      v[static_cast<size_t>(j)] = static_cast<float>(x);
      norm += x * x;
    }
    norm = std::sqrt(norm);
    double along = 0;
    for (int j = 0; j < kDim; ++j) {
      v[static_cast<size_t>(j)] = static_cast<float>(v[static_cast<size_t>(j)] / norm);
      along += sign * center[static_cast<size_t>(j)] * v[static_cast<size_t>(j)];
    }
    if (along >= 0.9) return v;
  }
}

std::string token_name(bool aggressive, int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%s%03d", aggressive ? "agg" : "neu", i);
  return buf;
}

// Class-conditional first-order tag chains. Class 1 mimics imperative /
// pronoun-initial attacks, class 0 plain declaratives; the bigram statistics
// are what pos_cnn can learn.
constexpr std::array<const char*, 8> kTags{"VERB", "PRON", "NOUN", "DET", "ADJ",
                                           "ADV", "ADP", "PRT"};

int pick(const std::array<double, 8>& weights, std::mt19937_64& rng) {
  double total = 0;
  for (double w : weights) total += w;
  double r = uniform_real(rng) * total;
  for (size_t i = 0; i < weights.size(); ++i) {
    r -= weights[i];
    if (r < 0) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size()) - 1;
}

// rows follow kTags order: VERB PRON NOUN DET ADJ ADV ADP PRT
constexpr std::array<double, 8> kStart1{5, 3, 1, 0, 0, 1, 0, 0};
constexpr std::array<std::array<double, 8>, 8> kTrans1{{
    {0, 4, 2, 0, 1, 1, 1, 1},  // VERB ->
    {5, 0, 1, 0, 2, 1, 0, 1},  // PRON ->
    {3, 2, 1, 0, 1, 1, 1, 1},  // NOUN ->
    {0, 0, 4, 0, 4, 0, 0, 0},  // DET ->
    {1, 2, 4, 0, 1, 1, 0, 1},  // ADJ ->
    {4, 2, 1, 0, 1, 1, 0, 1},  // ADV ->
    {1, 3, 3, 1, 1, 0, 0, 1},  // ADP ->
    {3, 3, 2, 0, 1, 1, 0, 0},  // PRT ->
}};

constexpr std::array<double, 8> kStart0{0, 1, 3, 5, 1, 0, 0, 0};
constexpr std::array<std::array<double, 8>, 8> kTrans0{{
    {0, 0, 1, 4, 1, 1, 3, 0},  // VERB ->
    {2, 0, 1, 2, 1, 1, 2, 1},  // PRON ->
    {3, 0, 1, 1, 0, 1, 3, 1},  // NOUN ->
    {0, 0, 5, 0, 4, 0, 0, 0},  // DET ->
    {0, 0, 5, 0, 2, 0, 1, 1},  // ADJ ->
    {2, 0, 0, 2, 3, 1, 1, 0},  // ADV ->
    {0, 0, 2, 5, 1, 0, 0, 0},  // ADP ->
    {0, 0, 2, 4, 2, 0, 1, 0},  // PRT ->
}};

std::vector<std::string> draw_tags(int length, int label, std::mt19937_64& rng) {
  const auto& start = label == 1 ? kStart1 : kStart0;
  const auto& trans = label == 1 ? kTrans1 : kTrans0;
  std::vector<std::string> tags;
  tags.reserve(static_cast<size_t>(length));
  int state = pick(start, rng);
  tags.push_back(kTags[static_cast<size_t>(state)]);
  for (int i = 1; i < length; ++i) {
    state = pick(trans[static_cast<size_t>(state)], rng);
    tags.push_back(kTags[static_cast<size_t>(state)]);
  }
  return tags;
}

}  // namespace

SynthData synth_aggression(int n_sentences, uint64_t seed) {
  if (n_sentences < 20) fail("synth_aggression: need at least 20 sentences");

  SynthData out;
  out.table = EmbeddingTable(kDim);

  auto center_rng = substream(seed, "synth.centers");
  const std::vector<float> center = unit_gauss(center_rng);
  auto vec_rng = substream(seed, "synth.vectors");
  for (int i = 0; i < kTokensPerClass; ++i) {
    out.table.insert(token_name(true, i), cluster_vector(center, +1.0, vec_rng));
  }
  for (int i = 0; i < kTokensPerClass; ++i) {
    out.table.insert(token_name(false, i), cluster_vector(center, -1.0, vec_rng));
  }

  for (int i = 0; i < 10; ++i) {
    out.lexicon_text += token_name(true, i);
    out.lexicon_text += "\n";
  }

  out.data.name = "synth";
  out.data.class_names = {"neutral", "aggressive"};
  auto rng = substream(seed, "synth.data");
  for (int i = 0; i < n_sentences; ++i) {
    Example ex;
    ex.label = i % 2;
    const int length = 5 + static_cast<int>(uniform_index(rng, 16));  // 5..20

    int n_aggressive;
    if (ex.label == 1) {
      // at least 60% aggressive tokens
      n_aggressive = static_cast<int>(std::ceil(uniform_range(rng, 0.60, 0.90) * length));
    } else {
      // at most 10%
      const int cap = length / 10;
      n_aggressive = static_cast<int>(uniform_index(rng, static_cast<uint64_t>(cap) + 1));
    }

    std::vector<bool> aggressive_at(static_cast<size_t>(length), false);
    for (int slot : sample_without_replacement(length, n_aggressive, rng)) {
      aggressive_at[static_cast<size_t>(slot)] = true;
    }
    for (int t = 0; t < length; ++t) {
      const int id = static_cast<int>(uniform_index(rng, kTokensPerClass));
      ex.tokens.push_back(token_name(aggressive_at[static_cast<size_t>(t)], id));
    }
    ex.pos_tags = draw_tags(length, ex.label, rng);
    for (size_t t = 0; t < ex.tokens.size(); ++t) {
      if (t > 0) ex.text += ' ';
      ex.text += ex.tokens[t];
    }
    out.data.examples.push_back(std::move(ex));
  }
  return out;
}

}  // namespace sentclass
