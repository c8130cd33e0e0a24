#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "sentclass/corpus.hpp"
#include "sentclass/embeddings.hpp"
#include "sentclass/error.hpp"
#include "sentclass/rng.hpp"
#include "sentclass/text.hpp"
#include "test_util.hpp"

using namespace sentclass;
using testutil::TempDir;
using testutil::contains;
using testutil::error_message;
using testutil::write_file;

namespace {

LabeledDataset make_dataset(const std::vector<std::pair<std::string, int>>& rows) {
  LabeledDataset ds;
  for (const auto& [text, label] : rows) {
    Example ex;
    ex.text = text;
    ex.tokens = tokenize(text);
    ex.label = label;
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

}  // namespace

TEST_CASE("polarity pair loads positives first, then negatives") {
  TempDir dir;
  write_file(dir.file("pos.txt"), "good movie\nreally fine\n");
  write_file(dir.file("neg.txt"), "bad movie\n");
  LabeledDataset ds = load_polarity_pair(dir.file("pos.txt"), dir.file("neg.txt"));
  REQUIRE(ds.size() == 3);
  CHECK(ds.examples[0].text == "good movie");
  CHECK(ds.examples[0].label == 1);
  CHECK(ds.examples[1].label == 1);
  CHECK(ds.examples[2].text == "bad movie");
  CHECK(ds.examples[2].label == 0);
}

TEST_CASE("polarity pair skips blank lines and rejects empty corpora") {
  TempDir dir;
  write_file(dir.file("pos.txt"), "one\n\n  \ntwo\n");
  write_file(dir.file("neg.txt"), "three\n");
  CHECK(load_polarity_pair(dir.file("pos.txt"), dir.file("neg.txt")).size() == 3);

  write_file(dir.file("empty_a.txt"), "");
  write_file(dir.file("empty_b.txt"), "\n\n");
  CHECK(!error_message([&] {
          load_polarity_pair(dir.file("empty_a.txt"), dir.file("empty_b.txt"));
        }).empty());
  CHECK(contains(error_message([&] {
          load_polarity_pair(dir.file("missing.txt"), dir.file("neg.txt"));
        }),
        "cannot open"));
}

TEST_CASE("polarity pair replaces ill-formed bytes instead of failing") {
  TempDir dir;
  write_file(dir.file("pos.txt"), std::string("caf\xC3\xA9 ok\n"));   // valid UTF-8
  write_file(dir.file("neg.txt"), std::string("bad \xFF byte\n"));     // invalid byte
  LabeledDataset ds = load_polarity_pair(dir.file("pos.txt"), dir.file("neg.txt"));
  CHECK(ds.examples[0].text == "caf\xC3\xA9 ok");
  CHECK(contains(ds.examples[1].text, "\xEF\xBF\xBD"));  // U+FFFD replacement
}

TEST_CASE("tsv loader parses labels and flags malformed lines with numbers") {
  TempDir dir;
  write_file(dir.file("data.tsv"), "1\tyou are an idiot\n0\tfine by me\n");
  LabeledDataset ds = load_tsv(dir.file("data.tsv"), false);
  REQUIRE(ds.size() == 2);
  CHECK(ds.examples[0].label == 1);
  CHECK(ds.examples[0].text == "you are an idiot");
  CHECK(ds.examples[1].label == 0);

  write_file(dir.file("badlabel.tsv"), "1\tok\n2\tfoo\n");
  CHECK(contains(error_message([&] { load_tsv(dir.file("badlabel.tsv"), false); }), ":2"));

  write_file(dir.file("notab.tsv"), "1 no tab here\n");
  const std::string msg = error_message([&] { load_tsv(dir.file("notab.tsv"), false); });
  CHECK(contains(msg, ":1"));
  CHECK(contains(msg, "TAB"));

  write_file(dir.file("empty.tsv"), "\n");
  CHECK(!error_message([&] { load_tsv(dir.file("empty.tsv"), false); }).empty());
}

TEST_CASE("tagged tsv splits word_TAG tokens and lowercases the words") {
  TempDir dir;
  write_file(dir.file("tagged.tsv"), "0\tI_PRON like_VERB it_PRON\n");
  LabeledDataset ds = load_tsv(dir.file("tagged.tsv"), true);
  REQUIRE(ds.size() == 1);
  CHECK(ds.examples[0].tokens == std::vector<std::string>{"i", "like", "it"});
  CHECK(ds.examples[0].pos_tags == std::vector<std::string>{"PRON", "VERB", "PRON"});
  CHECK(ds.examples[0].text == "i like it");

  write_file(dir.file("untagged_token.tsv"), "0\tfine_ADJ oops\n");
  const std::string msg = error_message([&] { load_tsv(dir.file("untagged_token.tsv"), true); });
  CHECK(contains(msg, ":1"));
  CHECK(contains(msg, "oops"));
}

TEST_CASE("tsv round trip preserves examples, tagged and plain") {
  TempDir dir;
  LabeledDataset plain = make_dataset({{"hello there", 1}, {"not so good", 0}});
  write_tsv(plain, dir.file("plain.tsv"), false);
  LabeledDataset back = load_tsv(dir.file("plain.tsv"), false);
  REQUIRE(back.size() == plain.size());
  for (size_t i = 0; i < plain.size(); ++i) {
    CHECK(back.examples[i].text == plain.examples[i].text);
    CHECK(back.examples[i].label == plain.examples[i].label);
  }

  LabeledDataset tagged = plain;
  PosTagger tagger;
  tag_dataset(tagged, tagger);
  write_tsv(tagged, dir.file("tagged.tsv"), true);
  LabeledDataset tback = load_tsv(dir.file("tagged.tsv"), true);
  REQUIRE(tback.size() == tagged.size());
  for (size_t i = 0; i < tagged.size(); ++i) {
    CHECK(tback.examples[i].tokens == tagged.examples[i].tokens);
    CHECK(tback.examples[i].pos_tags == tagged.examples[i].pos_tags);
  }
}

TEST_CASE("split hands eval round(n * fraction) examples, stratified") {
  std::vector<std::pair<std::string, int>> rows;
  for (int i = 0; i < 5331; ++i) rows.push_back({"p" + std::to_string(i), 1});
  for (int i = 0; i < 5331; ++i) rows.push_back({"n" + std::to_string(i), 0});
  LabeledDataset ds = make_dataset(rows);

  auto [train, eval] = split(ds, 0.1, 1);
  CHECK(eval.size() == 1066);  // round(10662 * 0.1)
  CHECK(train.size() == 9596);
  std::array<int64_t, 2> eval_counts{0, 0};
  for (const Example& ex : eval.examples) ++eval_counts[static_cast<size_t>(ex.label)];
  CHECK(eval_counts[0] == 533);
  CHECK(eval_counts[1] == 533);
}

TEST_CASE("split is deterministic and refuses degenerate fractions") {
  LabeledDataset ds = make_dataset({{"a", 0}, {"b", 1}, {"c", 0}, {"d", 1}, {"e", 0},
                                    {"f", 1}, {"g", 0}, {"h", 1}, {"i", 0}, {"j", 1}});
  auto [t1, e1] = split(ds, 0.2, 9);
  auto [t2, e2] = split(ds, 0.2, 9);
  REQUIRE(e1.size() == 2);
  for (size_t i = 0; i < e1.size(); ++i) CHECK(e1.examples[i].text == e2.examples[i].text);
  for (size_t i = 0; i < t1.size(); ++i) CHECK(t1.examples[i].text == t2.examples[i].text);

  // one example of each class in the 20% eval slice
  std::array<int, 2> c{0, 0};
  for (const Example& ex : e1.examples) ++c[static_cast<size_t>(ex.label)];
  CHECK(c[0] == 1);
  CHECK(c[1] == 1);

  LabeledDataset two = make_dataset({{"a", 0}, {"b", 1}});
  CHECK(!error_message([&] { split(two, 0.9, 1); }).empty());   // empty train
  CHECK(!error_message([&] { split(two, 0.1, 1); }).empty());   // empty eval
  CHECK(!error_message([&] { split(two, 0.0, 1); }).empty());
  CHECK(!error_message([&] { split(two, 1.0, 1); }).empty());
}

TEST_CASE("split partitions: disjoint, covering, quota-accurate") {
  auto rng = substream(11, "test.split");
  for (int round = 0; round < 40; ++round) {
    const int n = 4 + static_cast<int>(uniform_index(rng, 40));
    std::vector<std::pair<std::string, int>> rows;
    int ones = 0;
    for (int i = 0; i < n; ++i) {
      const int label = i < 2 ? i : static_cast<int>(uniform_index(rng, 2));  // both classes present
      ones += label;
      rows.push_back({"ex" + std::to_string(i), label});
    }
    const double f = 0.1 + 0.8 * uniform_real(rng);
    LabeledDataset ds = make_dataset(rows);
    const int64_t target = std::llround(n * f);
    if (target == 0 || target == n) continue;

    LabeledDataset train, eval;
    try {
      std::tie(train, eval) = split(ds, f, 17 + static_cast<uint64_t>(round));
    } catch (const Error&) {
      continue;  // a legal degenerate (one side empty after quotas)
    }
    CHECK(static_cast<int64_t>(eval.size()) == target);
    CHECK(train.size() + eval.size() == ds.size());

    std::set<std::string> seen;
    for (const Example& ex : train.examples) seen.insert(ex.text);
    for (const Example& ex : eval.examples) {
      CHECK(seen.count(ex.text) == 0);  // disjoint
      seen.insert(ex.text);
    }
    CHECK(seen.size() == ds.size());  // covering (texts are unique by construction)

    // per-class quota within 1 of the proportional share
    std::array<int64_t, 2> ec{0, 0};
    for (const Example& ex : eval.examples) ++ec[static_cast<size_t>(ex.label)];
    CHECK(std::abs(static_cast<double>(ec[1]) - ones * f) <= 1.0);
  }
}

TEST_CASE("stats reports token counts, vocabulary, and table coverage") {
  LabeledDataset ds = make_dataset({{"a a a", 0}});
  CorpusStats st = stats(ds);
  CHECK(st.n_sentences == 1);
  CHECK(st.n_classes == 2);
  CHECK(st.vocab_size == 1);
  CHECK(st.avg_sentence_length == doctest::Approx(3.0));
  CHECK(st.avg_sentence_length_rounded == 3);
  CHECK(st.vocab_in_model == 0);  // no table given

  EmbeddingTable table(2);
  table.insert("a", {1.0f, 0.0f});
  table.insert("z", {0.0f, 1.0f});
  CHECK(stats(ds, &table).vocab_in_model == 1);

  LabeledDataset mixed = make_dataset({{"a b c", 0}, {"a", 1}});
  CorpusStats mst = stats(mixed);
  CHECK(mst.n_sentences == 2);
  CHECK(mst.vocab_size == 3);
  CHECK(mst.avg_sentence_length == doctest::Approx(2.0));
}
