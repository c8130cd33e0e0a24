#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "sentclass/embeddings.hpp"
#include "sentclass/error.hpp"
#include "sentclass/rng.hpp"
#include "sentclass/text.hpp"
#include "test_util.hpp"

using namespace sentclass;
using testutil::TempDir;
using testutil::contains;
using testutil::error_message;
using testutil::read_file;
using testutil::write_file;

TEST_CASE("load_table accepts the header and headerless layouts") {
  TempDir dir;
  write_file(dir.file("with_header.txt"), "2 3\na 1 0 0\nb 0 1 0\n");
  EmbeddingTable t = load_table(dir.file("with_header.txt"));
  CHECK(t.dim() == 3);
  CHECK(t.size() == 2);
  REQUIRE(t.find("a") != nullptr);
  CHECK((*t.find("a"))[0] == 1.0f);

  write_file(dir.file("plain.txt"), "a 1 0\nb 0 1\nc 0.5 0.5\n");
  EmbeddingTable p = load_table(dir.file("plain.txt"));
  CHECK(p.dim() == 2);  // inferred from the first row
  CHECK(p.size() == 3);
}

TEST_CASE("load_table rejects ragged rows and unparsable numbers with line numbers") {
  TempDir dir;
  write_file(dir.file("ragged.txt"), "2 3\na 1 0 0\nb 1 0\n");
  CHECK(contains(error_message([&] { load_table(dir.file("ragged.txt")); }), ":3"));

  write_file(dir.file("nan.txt"), "a 1 zebra\n");
  CHECK(contains(error_message([&] { load_table(dir.file("nan.txt")); }), "zebra"));

  write_file(dir.file("empty.txt"), "\n\n");
  CHECK(!error_message([&] { load_table(dir.file("empty.txt")); }).empty());
  CHECK(contains(error_message([&] { load_table(dir.file("missing.txt")); }), "cannot open"));
}

TEST_CASE("duplicate words: the last occurrence wins") {
  TempDir dir;
  write_file(dir.file("dup.txt"), "a 1 0\na 0 1\nb 1 1\n");
  EmbeddingTable t = load_table(dir.file("dup.txt"));
  CHECK(t.size() == 2);
  REQUIRE(t.find("a") != nullptr);
  CHECK((*t.find("a"))[0] == 0.0f);
  CHECK((*t.find("a"))[1] == 1.0f);
}

TEST_CASE("save_table round-trips bit-exactly and rejects unwritable words") {
  TempDir dir;
  EmbeddingTable t(5);
  auto rng = substream(8, "test.table");
  for (int w = 0; w < 20; ++w) {
    std::vector<float> vec(5);
    for (float& x : vec) x = static_cast<float>(gauss(rng) * 3.0);
    t.insert("word" + std::to_string(w), std::move(vec));
  }
  save_table(t, dir.file("out.txt"));
  EmbeddingTable back = load_table(dir.file("out.txt"));
  REQUIRE(back.size() == t.size());
  CHECK(back.dim() == t.dim());
  for (int i = 0; i < t.size(); ++i) {
    CHECK(back.word(i) == t.word(i));  // file order preserved
    for (int j = 0; j < t.dim(); ++j) {
      CHECK(back.vector_at(i)[static_cast<size_t>(j)] == t.vector_at(i)[static_cast<size_t>(j)]);
    }
  }

  EmbeddingTable empty(4);
  save_table(empty, dir.file("empty_out.txt"));
  CHECK(read_file(dir.file("empty_out.txt")) == "0 4\n");

  EmbeddingTable bad(2);
  bad.insert("two words", {1.0f, 0.0f});
  CHECK(!error_message([&] { save_table(bad, dir.file("bad.txt")); }).empty());
}

TEST_CASE("cosine_distance endpoints, zero-vector convention, and bounds") {
  const std::vector<float> x{0.3f, -1.2f, 0.7f};
  const std::vector<float> ex{1.0f, 0.0f};
  const std::vector<float> ey{0.0f, 1.0f};
  const std::vector<float> mx{-1.0f, 0.0f};
  const std::vector<float> zero{0.0f, 0.0f};

  CHECK(cosine_distance(x, x) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(cosine_distance(ex, ey) == doctest::Approx(1.0));
  CHECK(cosine_distance(ex, mx) == doctest::Approx(2.0));
  CHECK(cosine_distance(zero, ex) == 1.0);
  CHECK(cosine_distance(ex, zero) == 1.0);
  CHECK(!error_message([&] { cosine_distance(ex, x); }).empty());  // dim mismatch

  auto rng = substream(9, "test.cosine");
  for (int round = 0; round < 200; ++round) {
    std::vector<float> u(4), v(4);
    for (float& a : u) a = static_cast<float>(gauss(rng));
    for (float& a : v) a = static_cast<float>(gauss(rng));
    const double d = cosine_distance(u, v);
    CHECK(d >= 0.0);
    CHECK(d <= 2.0);
    CHECK(cosine_distance(v, u) == d);  // symmetric, bit for bit

    // power-of-two scaling is exact in binary floating point
    std::vector<float> u2 = u;
    for (float& a : u2) a *= 4.0f;
    CHECK(cosine_distance(u2, v) == d);
    // general positive scaling agrees up to float rounding of the scaled
    // components (~1e-7 relative per entry)
    std::vector<float> u3 = u;
    for (float& a : u3) a *= 3.0f;
    CHECK(cosine_distance(u3, v) == doctest::Approx(d).epsilon(1e-5));
  }
}

TEST_CASE("nearest sorts ascending, excludes the query, breaks ties by word") {
  EmbeddingTable t(2);
  t.insert("a", {1.0f, 0.0f});
  t.insert("d", {1.0f, 0.0f});
  t.insert("b", {1.0f, 0.0f});
  t.insert("c", {0.0f, 1.0f});

  auto top = nearest(t, "a", 2);
  REQUIRE(top.size() == 2);
  CHECK(top[0].first == "b");  // distance 0, ties lexicographic
  CHECK(top[1].first == "d");
  CHECK(top[0].second == doctest::Approx(0.0));

  auto all = nearest(t, "a", 99);
  CHECK(all.size() == 3);  // k larger than the table: everything but the query
  CHECK(all[2].first == "c");
  CHECK(all[2].second == doctest::Approx(1.0));

  CHECK(contains(error_message([&] { nearest(t, "zzz", 3); }), "zzz"));
}

TEST_CASE("init_for_vocab copies pretrained rows and randomizes the rest") {
  Vocabulary vocab;
  vocab.add("known");
  vocab.add("novel");

  EmbeddingTable t(3);
  t.insert("known", {0.125f, -0.75f, 2.5f});

  EmbeddingMatrix m = init_for_vocab(&t, vocab, 3, 21);
  REQUIRE(m.rows == 4);
  REQUIRE(m.dim == 3);
  for (int j = 0; j < 3; ++j) CHECK(m.row(0)[static_cast<size_t>(j)] == 0.0f);  // PAD
  const auto known_row = m.row(vocab.lookup("known"));
  CHECK(known_row[0] == 0.125f);  // bit-equal copy
  CHECK(known_row[1] == -0.75f);
  CHECK(known_row[2] == 2.5f);
  for (int r : {Vocabulary::kUnk, vocab.lookup("novel")}) {
    for (float x : m.row(r)) {
      CHECK(x >= -0.25f);
      CHECK(x <= 0.25f);
    }
  }

  EmbeddingMatrix again = init_for_vocab(&t, vocab, 3, 21);
  CHECK(again.values == m.values);  // same seed, identical matrix

  EmbeddingMatrix rand_only = init_for_vocab(nullptr, vocab, 3, 21);
  for (int r = 1; r < rand_only.rows; ++r) {
    for (float x : rand_only.row(r)) {
      CHECK(x >= -0.25f);
      CHECK(x <= 0.25f);
    }
  }

  CHECK(!error_message([&] { init_for_vocab(&t, vocab, 5, 21); }).empty());  // dim mismatch
}

TEST_CASE("train_sgns learns a toy corpus and is deterministic in strict mode") {
  std::vector<std::vector<std::string>> corpus;
  for (int i = 0; i < 100; ++i) corpus.push_back({"x", "y"});

  SgnsConfig cfg;
  cfg.dim = 8;
  cfg.epochs = 5;
  cfg.min_count = 1;
  cfg.subsample = 0;  // keep every token of the tiny corpus
  cfg.seed = 3;

  SgnsReport report;
  EmbeddingTable t = train_sgns(corpus, cfg, &report);
  CHECK(t.size() == 2);
  CHECK(report.vocab_words == 2);
  CHECK(report.total_tokens == 200);
  REQUIRE(report.epoch_loss.size() == 5);
  CHECK(report.epoch_loss.back() < report.epoch_loss.front());  // the fit improves

  EmbeddingTable t2 = train_sgns(corpus, cfg, nullptr);
  for (int i = 0; i < t.size(); ++i) {
    for (int j = 0; j < t.dim(); ++j) {
      CHECK(t.vector_at(i)[static_cast<size_t>(j)] == t2.vector_at(i)[static_cast<size_t>(j)]);
    }
  }
}

TEST_CASE("train_sgns separates two non-interacting communities") {
  auto rng = substream(6, "test.sgns");
  std::vector<std::vector<std::string>> corpus;
  for (int s = 0; s < 400; ++s) {
    const char prefix = s % 2 == 0 ? 'a' : 'b';
    std::vector<std::string> sentence;
    for (int i = 0; i < 8; ++i) {
      sentence.push_back(prefix + std::to_string(uniform_index(rng, 10)));
    }
    corpus.push_back(std::move(sentence));
  }
  SgnsConfig cfg;
  cfg.dim = 16;
  cfg.epochs = 3;
  cfg.min_count = 1;
  cfg.subsample = 0;
  cfg.seed = 6;
  EmbeddingTable t = train_sgns(corpus, cfg, nullptr);

  double intra = 0, inter = 0;
  int n_intra = 0, n_inter = 0;
  for (int i = 0; i < t.size(); ++i) {
    for (int j = i + 1; j < t.size(); ++j) {
      const double sim = 1.0 - cosine_distance(t.vector_at(i), t.vector_at(j));
      if (t.word(i)[0] == t.word(j)[0]) {
        intra += sim;
        ++n_intra;
      } else {
        inter += sim;
        ++n_inter;
      }
    }
  }
  CHECK(intra / n_intra > inter / n_inter);  // a-words cluster away from b-words
}

TEST_CASE("train_sgns rejects degenerate input") {
  CHECK(!error_message([] { train_sgns({}, SgnsConfig{}); }).empty());
  SgnsConfig cfg;  // default min_count 5 filters everything out
  CHECK(!error_message([&] { train_sgns({{"x", "y"}}, cfg); }).empty());
}
