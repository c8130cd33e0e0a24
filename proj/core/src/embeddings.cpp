#include "sentclass/embeddings.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include "sentclass/error.hpp"
#include "sentclass/rng.hpp"

namespace sentclass {

const std::vector<float>* EmbeddingTable::find(const std::string& word) const {
  auto it = index_.find(word);
  return it == index_.end() ? nullptr : &vectors_[static_cast<size_t>(it->second)];
}

void EmbeddingTable::insert(const std::string& word, std::vector<float> vec) {
  if (dim_ == 0) dim_ = static_cast<int>(vec.size());
  auto it = index_.find(word);
  if (it != index_.end()) {
    vectors_[static_cast<size_t>(it->second)] = std::move(vec);
    return;
  }
  index_[word] = static_cast<int>(words_.size());
  words_.push_back(word);
  vectors_.push_back(std::move(vec));
}

namespace {

bool parse_float(std::string_view s, float& out) {
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

bool parse_uint(std::string_view s, uint64_t& out) {
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  size_t p = 0;
  while (p < line.size()) {
    while (p < line.size() && (line[p] == ' ' || line[p] == '\t')) ++p;
    if (p >= line.size()) break;
    size_t q = p;
    while (q < line.size() && line[q] != ' ' && line[q] != '\t') ++q;
    fields.push_back(line.substr(p, q - p));
    p = q;
  }
  return fields;
}

}  // namespace

EmbeddingTable load_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open embedding table " + path);
  EmbeddingTable table;
  std::string line;
  size_t line_no = 0;
  int dim = -1;
  bool first_content = true;
  size_t duplicates = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto fields = split_fields(line);
    if (fields.empty()) continue;
    if (first_content) {
      first_content = false;
      uint64_t count = 0, header_dim = 0;
      if (fields.size() == 2 && parse_uint(fields[0], count) && parse_uint(fields[1], header_dim)) {
        dim = static_cast<int>(header_dim);
        continue;  // header line
      }
    }
    const std::string where = path + ":" + std::to_string(line_no);
    if (fields.size() < 2) fail(where + ": expected `word v1 .. v_dim`");
    if (dim < 0) dim = static_cast<int>(fields.size()) - 1;
    if (static_cast<int>(fields.size()) - 1 != dim) {
      fail(where + ": expected " + std::to_string(dim) + " values, got " +
           std::to_string(fields.size() - 1));
    }
    std::vector<float> vec(static_cast<size_t>(dim));
    for (int i = 0; i < dim; ++i) {
      if (!parse_float(fields[static_cast<size_t>(i) + 1], vec[static_cast<size_t>(i)])) {
        fail(where + ": unparsable number '" + std::string(fields[static_cast<size_t>(i) + 1]) + "'");
      }
    }
    std::string word(fields[0]);
    if (table.contains(word)) ++duplicates;
    table.insert(word, std::move(vec));
  }
  if (duplicates > 0) {
    std::cerr << "warning: " << path << ": " << duplicates
              << " duplicate word(s), last occurrence kept\n";
  }
  if (table.size() == 0) fail(path + ": embedding table holds no vectors");
  return table;
}

void save_table(const EmbeddingTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write " + path);
  out << table.size() << ' ' << table.dim() << '\n';
  char buf[64];
  for (int i = 0; i < table.size(); ++i) {
    const std::string& word = table.word(i);
    if (word.find(' ') != std::string::npos || word.find('\t') != std::string::npos) {
      fail("save_table: word contains whitespace: '" + word + "'");
    }
    out << word;
    for (float v : table.vector_at(i)) {
      std::snprintf(buf, sizeof(buf), " %.9g", static_cast<double>(v));
      out << buf;
    }
    out << '\n';
  }
  if (!out) fail("write failed: " + path);
}

double cosine_distance(std::span<const float> u, std::span<const float> v) {
  if (u.size() != v.size()) fail("cosine_distance: dimension mismatch");
  double dot = 0, nu = 0, nv = 0;
  for (size_t i = 0; i < u.size(); ++i) {
    dot += static_cast<double>(u[i]) * v[i];
    nu += static_cast<double>(u[i]) * u[i];
    nv += static_cast<double>(v[i]) * v[i];
  }
  if (nu == 0.0 || nv == 0.0) return 1.0;  // zero vector: maximal ignorance
  double c = dot / (std::sqrt(nu) * std::sqrt(nv));
  c = std::clamp(c, -1.0, 1.0);
  return 1.0 - c;
}

std::vector<std::pair<std::string, double>> nearest(const EmbeddingTable& table,
                                                    const std::string& word, int k) {
  const std::vector<float>* query = table.find(word);
  if (query == nullptr) fail("nearest: word '" + word + "' not in table");
  std::vector<std::pair<std::string, double>> all;
  all.reserve(static_cast<size_t>(table.size()));
  for (int i = 0; i < table.size(); ++i) {
    if (table.word(i) == word) continue;
    all.emplace_back(table.word(i), cosine_distance(*query, table.vector_at(i)));
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second < b.second;
    return a.first < b.first;
  });
  if (static_cast<int>(all.size()) > k) all.resize(static_cast<size_t>(k));
  return all;
}

EmbeddingMatrix init_for_vocab(const EmbeddingTable* table, const Vocabulary& vocab, int dim,
                               uint64_t seed) {
  if (table != nullptr && table->dim() != dim) {
    fail("init_for_vocab: table dim " + std::to_string(table->dim()) + " != requested dim " +
         std::to_string(dim));
  }
  EmbeddingMatrix m;
  m.rows = vocab.size();
  m.dim = dim;
  m.values.assign(static_cast<size_t>(m.rows) * dim, 0.0f);
  auto rng = substream(seed, "init");
  for (int r = 1; r < m.rows; ++r) {  // row 0 stays PAD = zero
    const std::vector<float>* pre = table ? table->find(vocab.token(r)) : nullptr;
    auto row = m.row(r);
    if (pre != nullptr) {
      std::copy(pre->begin(), pre->end(), row.begin());
    } else {
      for (int j = 0; j < dim; ++j) {
        row[static_cast<size_t>(j)] = static_cast<float>(uniform_range(rng, -0.25, 0.25));
      }
    }
  }
  return m;
}

namespace {

struct SgnsVocab {
  std::vector<std::string> words;   // count desc, ties lexicographic
  std::vector<int64_t> counts;
  std::unordered_map<std::string, int> index;
  int64_t total = 0;
};

SgnsVocab build_sgns_vocab(const std::vector<std::vector<std::string>>& corpus, int min_count) {
  std::map<std::string, int64_t> counts;
  for (const auto& sentence : corpus) {
    for (const auto& token : sentence) ++counts[token];
  }
  std::vector<std::pair<std::string, int64_t>> items;
  for (const auto& [word, count] : counts) {
    if (count >= min_count) items.emplace_back(word, count);
  }
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  SgnsVocab v;
  for (const auto& [word, count] : items) {
    v.index[word] = static_cast<int>(v.words.size());
    v.words.push_back(word);
    v.counts.push_back(count);
    v.total += count;
  }
  return v;
}

constexpr int kUnigramTableSize = 1 << 20;

// unigram distribution raised to 3/4, quantized into a sampling table
std::vector<int> build_unigram_table(const SgnsVocab& vocab) {
  std::vector<int> table(kUnigramTableSize);
  double norm = 0;
  for (int64_t c : vocab.counts) norm += std::pow(static_cast<double>(c), 0.75);
  size_t i = 0;
  double cum = std::pow(static_cast<double>(vocab.counts[0]), 0.75) / norm;
  for (size_t a = 0; a < table.size(); ++a) {
    table[a] = static_cast<int>(i);
    if (static_cast<double>(a) / kUnigramTableSize > cum && i + 1 < vocab.words.size()) {
      ++i;
      cum += std::pow(static_cast<double>(vocab.counts[i]), 0.75) / norm;
    }
  }
  return table;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct SgnsState {
  std::vector<float> syn0, syn1;  // input / output vectors
  std::vector<double> keep_prob;  // subsampling
  std::vector<int> unigram;
  int dim = 0;
};

// one (center, context) pair with `negatives` sampled non-contexts
double sgns_update(SgnsState& st, int center, int context, int negatives, float alpha,
                   std::mt19937_64& rng) {
  float* v_in = st.syn0.data() + static_cast<size_t>(center) * st.dim;
  std::vector<float> accum(static_cast<size_t>(st.dim), 0.0f);
  double loss = 0;
  for (int d = 0; d <= negatives; ++d) {
    int target;
    int label;
    if (d == 0) {
      target = context;
      label = 1;
    } else {
      target = st.unigram[static_cast<size_t>(uniform_index(rng, kUnigramTableSize))];
      if (target == context) continue;
      label = 0;
    }
    float* v_out = st.syn1.data() + static_cast<size_t>(target) * st.dim;
    double f = 0;
    for (int j = 0; j < st.dim; ++j) f += static_cast<double>(v_in[j]) * v_out[j];
    double s = sigmoid(f);
    loss += label == 1 ? -std::log(std::max(s, 1e-12)) : -std::log(std::max(1.0 - s, 1e-12));
    float g = static_cast<float>((label - s) * alpha);
    for (int j = 0; j < st.dim; ++j) {
      accum[static_cast<size_t>(j)] += g * v_out[j];
      v_out[j] += g * v_in[j];
    }
  }
  for (int j = 0; j < st.dim; ++j) v_in[j] += accum[static_cast<size_t>(j)];
  return loss;
}

}  // namespace

EmbeddingTable train_sgns(const std::vector<std::vector<std::string>>& corpus,
                          const SgnsConfig& config, SgnsReport* report) {
  if (corpus.empty()) fail("train_sgns: empty corpus");
  SgnsVocab vocab = build_sgns_vocab(corpus, config.min_count);
  if (vocab.words.size() < 2) {
    fail("train_sgns: vocabulary degenerate after min_count filter (" +
         std::to_string(vocab.words.size()) + " words)");
  }

  SgnsState st;
  st.dim = config.dim;
  st.unigram = build_unigram_table(vocab);
  st.syn0.resize(vocab.words.size() * static_cast<size_t>(config.dim));
  st.syn1.assign(vocab.words.size() * static_cast<size_t>(config.dim), 0.0f);
  {
    auto rng = substream(config.seed, "sgns.init");
    for (float& x : st.syn0) {
      x = static_cast<float>((uniform_real(rng) - 0.5) / config.dim);
    }
  }
  st.keep_prob.resize(vocab.words.size(), 1.0);
  if (config.subsample > 0) {
    for (size_t w = 0; w < vocab.words.size(); ++w) {
      double f = static_cast<double>(vocab.counts[w]);
      double thr = config.subsample * static_cast<double>(vocab.total);
      st.keep_prob[w] = std::min(1.0, (std::sqrt(f / thr) + 1.0) * thr / f);
    }
  }

  // sentences as vocabulary ids, filtered words dropped
  std::vector<std::vector<int>> ids;
  ids.reserve(corpus.size());
  int64_t corpus_tokens = 0;
  for (const auto& sentence : corpus) {
    std::vector<int> s;
    for (const auto& token : sentence) {
      auto it = vocab.index.find(token);
      if (it != vocab.index.end()) s.push_back(it->second);
    }
    corpus_tokens += static_cast<int64_t>(s.size());
    if (!s.empty()) ids.push_back(std::move(s));
  }
  if (corpus_tokens == 0) fail("train_sgns: no trainable tokens");

  if (report != nullptr) {
    report->epoch_loss.clear();
    report->vocab_words = static_cast<int64_t>(vocab.words.size());
    report->total_tokens = corpus_tokens;
  }

  const int64_t plan = static_cast<int64_t>(config.epochs) * corpus_tokens + 1;
  const int workers = std::max(1, config.workers);

  auto run_shard = [&](size_t begin, size_t end, std::mt19937_64 rng, int64_t processed_base,
                       double* loss_out, int64_t* pairs_out) {
    double loss = 0;
    int64_t pairs = 0;
    int64_t processed = processed_base;
    for (size_t s = begin; s < end; ++s) {
      double alpha = config.learning_rate *
                     (1.0 - static_cast<double>(processed) / static_cast<double>(plan));
      alpha = std::max(alpha, config.min_learning_rate);
      std::vector<int> kept;
      for (int w : ids[s]) {
        ++processed;
        if (st.keep_prob[static_cast<size_t>(w)] >= 1.0 ||
            uniform_real(rng) < st.keep_prob[static_cast<size_t>(w)]) {
          kept.push_back(w);
        }
      }
      const int len = static_cast<int>(kept.size());
      for (int i = 0; i < len; ++i) {
        int win = 1 + static_cast<int>(uniform_index(rng, static_cast<uint64_t>(config.window)));
        for (int j = std::max(0, i - win); j <= std::min(len - 1, i + win); ++j) {
          if (j == i) continue;
          loss += sgns_update(st, kept[static_cast<size_t>(i)], kept[static_cast<size_t>(j)],
                              config.negatives, static_cast<float>(alpha), rng);
          ++pairs;
        }
      }
    }
    *loss_out = loss;
    *pairs_out = pairs;
  };

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double loss = 0;
    int64_t pairs = 0;
    if (workers == 1) {
      auto rng = substream(config.seed, "sgns.train", static_cast<uint64_t>(epoch));
      run_shard(0, ids.size(), std::move(rng), corpus_tokens * epoch, &loss, &pairs);
    } else {
      // hogwild: shards race on the shared weight arrays, results vary run to run
      std::vector<std::thread> pool;
      std::vector<double> shard_loss(static_cast<size_t>(workers), 0.0);
      std::vector<int64_t> shard_pairs(static_cast<size_t>(workers), 0);
      for (int w = 0; w < workers; ++w) {
        size_t begin = ids.size() * static_cast<size_t>(w) / static_cast<size_t>(workers);
        size_t end = ids.size() * (static_cast<size_t>(w) + 1) / static_cast<size_t>(workers);
        auto rng = substream(config.seed, "sgns.worker",
                             static_cast<uint64_t>(epoch) * workers + static_cast<uint64_t>(w));
        pool.emplace_back(run_shard, begin, end, std::move(rng), corpus_tokens * epoch,
                          &shard_loss[static_cast<size_t>(w)], &shard_pairs[static_cast<size_t>(w)]);
      }
      for (auto& t : pool) t.join();
      for (int w = 0; w < workers; ++w) {
        loss += shard_loss[static_cast<size_t>(w)];
        pairs += shard_pairs[static_cast<size_t>(w)];
      }
    }
    if (report != nullptr) {
      report->epoch_loss.push_back(pairs > 0 ? loss / static_cast<double>(pairs) : 0.0);
    }
  }

  EmbeddingTable table(config.dim);
  for (size_t w = 0; w < vocab.words.size(); ++w) {
    std::vector<float> vec(st.syn0.begin() + static_cast<int64_t>(w) * config.dim,
                           st.syn0.begin() + static_cast<int64_t>(w + 1) * config.dim);
    table.insert(vocab.words[w], std::move(vec));
  }
  return table;
}

}  // namespace sentclass
