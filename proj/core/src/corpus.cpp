#include "sentclass/corpus.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "sentclass/embeddings.hpp"
#include "sentclass/error.hpp"
#include "sentclass/rng.hpp"

namespace sentclass {
namespace {

// Replaces ill-formed UTF-8 with U+FFFD so downstream output stays decodable.
std::string sanitize_utf8(const std::string& in) {
  static const std::string replacement = "\xEF\xBF\xBD";
  std::string out;
  out.reserve(in.size());
  size_t i = 0;
  while (i < in.size()) {
    unsigned char c = static_cast<unsigned char>(in[i]);
    size_t len = 0;
    if (c < 0x80) {
      len = 1;
    } else if ((c & 0xE0) == 0xC0 && c >= 0xC2) {
      len = 2;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
    } else if ((c & 0xF8) == 0xF0 && c <= 0xF4) {
      len = 4;
    }
    bool ok = len > 0 && i + len <= in.size();
    for (size_t j = 1; ok && j < len; ++j) {
      ok = (static_cast<unsigned char>(in[i + j]) & 0xC0) == 0x80;
    }
    if (ok) {
      out.append(in, i, len);
      i += len;
    } else {
      out += replacement;
      i += 1;
    }
  }
  return out;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

bool is_blank(const std::string& s) {
  for (char c : s) {
    if (c != ' ' && c != '\t') return false;
  }
  return true;
}

std::string lower_ascii(std::string s) {
  for (char& c : s) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return s;
}

}  // namespace

LabeledDataset load_polarity_pair(const std::string& pos_path, const std::string& neg_path) {
  LabeledDataset ds;
  ds.name = "polarity";
  auto append = [&ds](const std::string& path, int label) {
    for (const std::string& line : read_lines(path)) {
      if (is_blank(line)) continue;
      Example ex;
      ex.text = sanitize_utf8(line);
      ex.label = label;
      ds.examples.push_back(std::move(ex));
    }
  };
  append(pos_path, 1);
  append(neg_path, 0);
  if (ds.examples.empty()) {
    fail("polarity pair " + pos_path + " + " + neg_path + " holds no examples");
  }
  return ds;
}

LabeledDataset load_tsv(const std::string& path, bool tagged) {
  LabeledDataset ds;
  ds.name = path;
  const std::vector<std::string> lines = read_lines(path);
  for (size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (is_blank(line)) continue;
    const std::string where = path + ":" + std::to_string(i + 1);
    size_t tab = line.find('\t');
    if (tab == std::string::npos) fail(where + ": missing TAB separator");
    std::string label = line.substr(0, tab);
    if (label != "0" && label != "1") fail(where + ": label must be 0 or 1, got '" + label + "'");
    Example ex;
    ex.label = label == "1" ? 1 : 0;
    std::string body = sanitize_utf8(line.substr(tab + 1));
    if (!tagged) {
      ex.text = body;
    } else {
      // pre-tokenized `word_TAG` stream; split on the last underscore
      std::string text;
      size_t p = 0;
      while (p < body.size()) {
        while (p < body.size() && (body[p] == ' ' || body[p] == '\t')) ++p;
        if (p >= body.size()) break;
        size_t q = p;
        while (q < body.size() && body[q] != ' ' && body[q] != '\t') ++q;
        std::string token = body.substr(p, q - p);
        size_t us = token.rfind('_');
        if (us == std::string::npos || us == 0 || us + 1 == token.size()) {
          fail(where + ": token '" + token + "' is not word_TAG");
        }
        std::string word = lower_ascii(token.substr(0, us));
        ex.tokens.push_back(word);
        ex.pos_tags.push_back(token.substr(us + 1));
        if (!text.empty()) text += ' ';
        text += word;
        p = q;
      }
      if (ex.tokens.empty()) fail(where + ": no tokens");
      ex.text = text;
    }
    ds.examples.push_back(std::move(ex));
  }
  if (ds.examples.empty()) fail(path + ": no examples");
  return ds;
}

void write_tsv(const LabeledDataset& dataset, const std::string& path, bool tagged) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write " + path);
  for (const Example& ex : dataset.examples) {
    out << ex.label << '\t';
    if (!tagged) {
      out << ex.text;
    } else {
      if (ex.pos_tags.size() != ex.tokens.size()) {
        fail("write_tsv: example lacks aligned tags: '" + ex.text + "'");
      }
      for (size_t i = 0; i < ex.tokens.size(); ++i) {
        if (i) out << ' ';
        out << ex.tokens[i] << '_' << ex.pos_tags[i];
      }
    }
    out << '\n';
  }
  if (!out) fail("write failed: " + path);
}

std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& dataset,
                                                double eval_fraction, uint64_t seed) {
  if (!(eval_fraction > 0.0 && eval_fraction < 1.0)) {
    fail("split: eval fraction must lie in (0, 1)");
  }
  const int64_t n = static_cast<int64_t>(dataset.size());
  const int64_t target = std::llround(static_cast<double>(n) * eval_fraction);

  // per-class quotas: floors first, remainder to the largest fractional parts
  std::array<int64_t, 2> class_n{0, 0};
  for (const Example& ex : dataset.examples) ++class_n[static_cast<size_t>(ex.label)];
  std::array<int64_t, 2> quota{0, 0};
  std::array<double, 2> frac{0, 0};
  int64_t assigned = 0;
  for (int c = 0; c < 2; ++c) {
    double ideal = static_cast<double>(class_n[c]) * eval_fraction;
    quota[c] = static_cast<int64_t>(std::floor(ideal));
    frac[c] = ideal - static_cast<double>(quota[c]);
    assigned += quota[c];
  }
  while (assigned < target) {  // at most 2 rounds with 2 classes
    int pick = (frac[1] > frac[0]) ? 1 : 0;
    if (quota[pick] >= class_n[pick]) pick = 1 - pick;
    if (quota[pick] >= class_n[pick]) break;
    ++quota[pick];
    frac[pick] = -1;
    ++assigned;
  }

  std::vector<int64_t> order(dataset.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int64_t>(i);
  auto rng = substream(seed, "split");
  shuffle_vec(order, rng);

  LabeledDataset train, eval;
  train.name = dataset.name + "/train";
  eval.name = dataset.name + "/eval";
  train.class_names = eval.class_names = dataset.class_names;
  std::array<int64_t, 2> taken{0, 0};
  for (int64_t idx : order) {
    const Example& ex = dataset.examples[static_cast<size_t>(idx)];
    auto c = static_cast<size_t>(ex.label);
    if (taken[c] < quota[c]) {
      ++taken[c];
      eval.examples.push_back(ex);
    } else {
      train.examples.push_back(ex);
    }
  }
  if (train.empty() || eval.empty()) {
    fail("split: fraction " + std::to_string(eval_fraction) + " leaves an empty side for n=" +
         std::to_string(n));
  }
  return {std::move(train), std::move(eval)};
}

CorpusStats stats(const LabeledDataset& dataset, const EmbeddingTable* table) {
  CorpusStats st;
  st.n_sentences = static_cast<int64_t>(dataset.size());
  std::set<std::string> vocab;
  int64_t total_tokens = 0;
  for (const Example& ex : dataset.examples) {
    total_tokens += static_cast<int64_t>(ex.tokens.size());
    for (const std::string& t : ex.tokens) vocab.insert(t);
  }
  st.vocab_size = static_cast<int64_t>(vocab.size());
  if (st.n_sentences > 0) {
    st.avg_sentence_length = static_cast<double>(total_tokens) / static_cast<double>(st.n_sentences);
  }
  st.avg_sentence_length_rounded = static_cast<int>(std::llround(st.avg_sentence_length));
  if (table != nullptr) {
    for (const std::string& t : vocab) {
      if (table->contains(t)) ++st.vocab_in_model;
    }
  }
  return st;
}

}  // namespace sentclass
