#include "sentclass/text.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <unordered_set>

#include "sentclass/error.hpp"

namespace sentclass {

namespace {

constexpr const char* kPadToken = "<pad>";
constexpr const char* kUnkToken = "<unk>";

bool is_sep_punct(char c) {
  switch (c) {
    case '.': case ',': case '!': case '?': case ';': case ':':
    case '"': case '(': case ')': case '[': case ']':
      return true;
    default:
      return false;
  }
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

// identical marks group into one token, capped at two repetitions
void emit_punct_runs(const std::string& word, size_t begin, size_t end,
                     std::vector<std::string>& out) {
  size_t i = begin;
  while (i < end) {
    char c = word[i];
    size_t run = 1;
    while (i + run < end && word[i + run] == c) ++run;
    out.push_back(std::string(std::min<size_t>(run, 2), c));
    i += run;
  }
}

}  // namespace

std::vector<std::string> tokenize(std::string_view raw) {
  std::vector<std::string> out;
  size_t p = 0;
  while (p < raw.size()) {
    while (p < raw.size() && is_space(raw[p])) ++p;
    if (p >= raw.size()) break;
    size_t q = p;
    while (q < raw.size() && !is_space(raw[q])) ++q;

    std::string word(raw.substr(p, q - p));
    for (char& c : word) {
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }

    size_t b = 0;
    size_t e = word.size();
    while (b < e && is_sep_punct(word[b])) ++b;
    size_t s = e;
    while (s > b && is_sep_punct(word[s - 1])) --s;

    emit_punct_runs(word, 0, b, out);
    if (s > b) out.push_back(word.substr(b, s - b));
    emit_punct_runs(word, s, e, out);
    p = q;
  }
  return out;
}

void tokenize_dataset(LabeledDataset& dataset) {
  for (Example& ex : dataset.examples) {
    if (ex.tokens.empty()) ex.tokens = tokenize(ex.text);
  }
}

Vocabulary::Vocabulary() {
  tokens_.push_back(kPadToken);
  tokens_.push_back(kUnkToken);
}

int Vocabulary::add(const std::string& token) {
  int idx = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
  index_[token] = idx;
  return idx;
}

int Vocabulary::lookup(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(const std::string& token) const { return index_.count(token) != 0; }

namespace {

Vocabulary vocab_from_counts(const std::map<std::string, int64_t>& counts, int min_count) {
  std::vector<std::pair<std::string, int64_t>> items;
  items.reserve(counts.size());
  for (const auto& [token, count] : counts) {
    if (count >= min_count) items.emplace_back(token, count);
  }
  // descending frequency, ties lexicographic (std::map iteration is sorted)
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary vocab;
  for (const auto& [token, count] : items) vocab.add(token);
  return vocab;
}

}  // namespace

Vocabulary build_vocab(const LabeledDataset& dataset, int min_count) {
  std::map<std::string, int64_t> counts;
  for (const Example& ex : dataset.examples) {
    for (const std::string& t : ex.tokens) ++counts[t];
  }
  return vocab_from_counts(counts, min_count);
}

Vocabulary build_tag_vocab(const LabeledDataset& dataset) {
  std::map<std::string, int64_t> counts;
  for (const Example& ex : dataset.examples) {
    for (const std::string& t : ex.pos_tags) ++counts[t];
  }
  return vocab_from_counts(counts, 1);
}

namespace {

const std::unordered_set<std::string>& pron_words() {
  static const std::unordered_set<std::string> set{
      "i", "you", "he", "she", "it", "we", "they", "me", "him", "her", "us", "them",
      "my", "your", "his", "its", "our", "their", "mine", "yours", "hers", "ours",
      "theirs", "myself", "yourself", "himself", "herself", "itself", "ourselves",
      "yourselves", "themselves", "who", "whom", "whose", "somebody", "someone",
      "something", "anybody", "anyone", "anything", "nobody", "nothing", "everybody",
      "everyone", "everything", "one"};
  return set;
}

const std::unordered_set<std::string>& det_words() {
  static const std::unordered_set<std::string> set{
      "a", "an", "the", "this", "that", "these", "those", "some", "any", "no",
      "every", "each", "either", "neither", "both", "all", "few", "many", "much",
      "most", "several", "such", "what", "which"};
  return set;
}

const std::unordered_set<std::string>& adp_words() {
  static const std::unordered_set<std::string> set{
      "of", "in", "for", "with", "on", "at", "by", "from", "about", "into", "over",
      "after", "under", "between", "through", "during", "before", "above", "below",
      "up", "down", "off", "near", "against", "among", "without", "within", "along",
      "across", "behind", "beyond", "toward", "towards", "upon", "onto", "around",
      "outside", "inside", "out"};
  return set;
}

const std::unordered_set<std::string>& conj_words() {
  static const std::unordered_set<std::string> set{
      "and", "or", "but", "nor", "so", "yet", "if", "because", "although", "though",
      "unless", "while", "whereas", "than", "whether", "since", "when", "where"};
  return set;
}

const std::unordered_set<std::string>& prt_words() {
  static const std::unordered_set<std::string> set{"to", "'s", "n't", "not"};
  return set;
}

const std::unordered_set<std::string>& adv_words() {
  static const std::unordered_set<std::string> set{
      "very", "too", "also", "just", "now", "then", "here", "there", "always",
      "never", "often", "again", "soon", "still", "even", "well", "how", "why",
      "really", "quite", "rather", "almost", "already"};
  return set;
}

// auxiliaries plus frequent base forms; also the stem list for -s/-ed/-ing
const std::unordered_set<std::string>& verb_words() {
  static const std::unordered_set<std::string> set{
      "be", "am", "is", "are", "was", "were", "been", "being", "do", "does", "did",
      "done", "have", "has", "had", "can", "could", "will", "would", "shall",
      "should", "may", "might", "must", "go", "goes", "went", "gone", "get", "got",
      "gotten", "say", "said", "make", "made", "know", "knew", "known", "think",
      "thought", "see", "saw", "seen", "want", "like", "love", "hate", "stop",
      "tell", "told", "ask", "use", "find", "found", "give", "gave", "given",
      "take", "took", "taken", "come", "came", "work", "call", "try", "need",
      "feel", "felt", "leave", "left", "put", "mean", "meant", "keep", "kept",
      "let", "begin", "began", "seem", "help", "talk", "turn", "start", "show",
      "hear", "heard", "play", "run", "ran", "move", "live", "believe", "hold",
      "held", "bring", "brought", "happen", "write", "wrote", "written", "sit",
      "sat", "stand", "stood", "lose", "lost", "pay", "paid", "meet", "met",
      "include", "continue", "set", "learn", "change", "lead", "led", "understand",
      "understood", "watch", "follow", "create", "speak", "spoke", "spoken",
      "read", "allow", "add", "spend", "spent", "grow", "grew", "grown", "open",
      "walk", "win", "won", "offer", "remember", "consider", "appear", "buy",
      "bought", "wait", "serve", "die", "send", "sent", "expect", "build", "built",
      "stay", "fall", "fell", "fallen", "cut", "reach", "kill", "remain", "shut",
      "look", "post", "suck", "eat", "ate", "eaten", "drink", "drank", "sleep",
      "slept", "fight", "fought", "hit", "throw", "threw", "thrown", "catch",
      "caught", "wish", "hope", "act"};
  return set;
}

// stem candidates after peeling an inflection suffix
bool is_verb_stem(const std::string& stem) {
  const auto& verbs = verb_words();
  if (verbs.count(stem)) return true;
  // doubled final consonant (stopp -> stop)
  if (stem.size() >= 2 && stem[stem.size() - 1] == stem[stem.size() - 2] &&
      verbs.count(stem.substr(0, stem.size() - 1))) {
    return true;
  }
  // dropped final e (lov -> love)
  if (verbs.count(stem + "e")) return true;
  return false;
}

bool ends_with(const std::string& s, const char* suffix) {
  size_t n = std::string_view(suffix).size();
  return s.size() >= n && s.compare(s.size() - n, n, suffix) == 0;
}

bool all_punct_chars(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    unsigned char u = static_cast<unsigned char>(c);
    if (u >= 0x80) return false;
    bool p = (c >= '!' && c <= '/') || (c >= ':' && c <= '@') || (c >= '[' && c <= '`') ||
             (c >= '{' && c <= '~');
    if (!p) return false;
  }
  return true;
}

bool looks_numeric(const std::string& s) {
  bool digit = false;
  size_t start = (s.size() > 1 && (s[0] == '+' || s[0] == '-')) ? 1 : 0;
  if (start >= s.size()) return false;
  for (size_t i = start; i < s.size(); ++i) {
    char c = s[i];
    if (c >= '0' && c <= '9') {
      digit = true;
    } else if (c != '.' && c != ',' && c != '/' && c != '%' && c != '-' && c != ':') {
      return false;
    }
  }
  return digit;
}

bool has_letter(const std::string& s) {
  for (char c : s) {
    unsigned char u = static_cast<unsigned char>(c);
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || u >= 0x80) return true;
  }
  return false;
}

}  // namespace

PosTagger::PosTagger() = default;

const std::array<std::string, 12>& PosTagger::tagset() {
  static const std::array<std::string, 12> tags{"NOUN", "VERB", "ADJ", "ADV",
                                               "PRON", "DET",  "ADP", "NUM",
                                               "CONJ", "PRT",  "PUNCT", "X"};
  return tags;
}

void PosTagger::load_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open tag lexicon " + path);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size()) {
      fail(path + ":" + std::to_string(line_no) + ": expected word<TAB>TAG");
    }
    std::string tag = line.substr(tab + 1);
    const auto& tags = tagset();
    if (std::find(tags.begin(), tags.end(), tag) == tags.end()) {
      fail(path + ":" + std::to_string(line_no) + ": unknown tag '" + tag + "'");
    }
    overrides_[line.substr(0, tab)] = tag;
  }
}

std::string PosTagger::tag(const std::string& token) const {
  if (auto it = overrides_.find(token); it != overrides_.end()) return it->second;
  if (all_punct_chars(token)) return "PUNCT";
  if (looks_numeric(token)) return "NUM";
  if (pron_words().count(token)) return "PRON";
  if (det_words().count(token)) return "DET";
  if (adp_words().count(token)) return "ADP";
  if (conj_words().count(token)) return "CONJ";
  if (prt_words().count(token)) return "PRT";
  if (adv_words().count(token)) return "ADV";
  if (verb_words().count(token)) return "VERB";
  if (ends_with(token, "ly") && token.size() > 3) return "ADV";
  if (token.size() > 4 && ends_with(token, "ing") && is_verb_stem(token.substr(0, token.size() - 3))) {
    return "VERB";
  }
  if (token.size() > 3 && ends_with(token, "ed") && is_verb_stem(token.substr(0, token.size() - 2))) {
    return "VERB";
  }
  if (token.size() > 2 && token.back() == 's') {
    std::string stem = token.substr(0, token.size() - 1);
    if (verb_words().count(stem)) return "VERB";
    if (ends_with(token, "es") && verb_words().count(token.substr(0, token.size() - 2))) return "VERB";
    if (ends_with(token, "ies") && verb_words().count(token.substr(0, token.size() - 3) + "y")) {
      return "VERB";
    }
  }
  if (ends_with(token, "ous") || ends_with(token, "ful") || ends_with(token, "ive")) return "ADJ";
  if (!has_letter(token)) return "X";
  return "NOUN";
}

std::vector<std::string> PosTagger::tag(const std::vector<std::string>& tokens) const {
  std::vector<std::string> tags;
  tags.reserve(tokens.size());
  for (const std::string& t : tokens) tags.push_back(tag(t));
  return tags;
}

void tag_dataset(LabeledDataset& dataset, const PosTagger& tagger) {
  for (Example& ex : dataset.examples) {
    if (ex.pos_tags.empty() && !ex.tokens.empty()) ex.pos_tags = tagger.tag(ex.tokens);
  }
}

EncodedSentence encode(const std::vector<std::string>& tokens,
                       const std::vector<std::string>* pos_tags, const Vocabulary& vocab,
                       const Vocabulary* tag_vocab, int max_len, int min_len) {
  if (tokens.empty()) fail("encode: empty token sequence");
  if (min_len > max_len) fail("encode: min_len exceeds max_len");
  EncodedSentence enc;
  int kept = std::min<int>(static_cast<int>(tokens.size()), max_len);
  enc.true_length = std::max(kept, min_len);
  enc.indices.assign(static_cast<size_t>(max_len), Vocabulary::kPad);
  for (int i = 0; i < kept; ++i) enc.indices[static_cast<size_t>(i)] = vocab.lookup(tokens[static_cast<size_t>(i)]);
  if (pos_tags != nullptr && tag_vocab != nullptr) {
    if (pos_tags->size() != tokens.size()) fail("encode: tags not aligned with tokens");
    enc.pos_indices.assign(static_cast<size_t>(max_len), Vocabulary::kPad);
    for (int i = 0; i < kept; ++i) {
      enc.pos_indices[static_cast<size_t>(i)] = tag_vocab->lookup((*pos_tags)[static_cast<size_t>(i)]);
    }
  }
  return enc;
}

}  // namespace sentclass
