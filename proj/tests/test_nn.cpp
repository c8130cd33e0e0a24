#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"
#include "sentclass/error.hpp"
#include "sentclass/nn.hpp"
#include "sentclass/rng.hpp"
#include "test_util.hpp"

using namespace sentclass;
using testutil::contains;
using testutil::error_message;

namespace {

// Two disjoint word pools, one per class; tags alternate so pos branches have
// valid (if uninformative) input.
struct Toy {
  Vocabulary vocab;
  Vocabulary tag_vocab;
  std::vector<EncodedSentence> batch;
  std::vector<int> labels;
};

const std::vector<std::string> kCalm{"calm", "gentle", "soft", "quiet"};
const std::vector<std::string> kRough{"angry", "furious", "hostile", "rude"};

Toy make_toy(int n, bool with_tags, int max_len, int min_len, uint64_t seed) {
  Toy toy;
  for (const auto& w : kCalm) toy.vocab.add(w);
  for (const auto& w : kRough) toy.vocab.add(w);
  for (const char* t : {"ADJ", "NOUN", "VERB"}) toy.tag_vocab.add(t);
  auto rng = substream(seed, "test.nn.toy");
  for (int i = 0; i < n; ++i) {
    const auto& pool = i % 2 == 0 ? kCalm : kRough;
    const int len = 3 + static_cast<int>(uniform_index(rng, 4));
    std::vector<std::string> toks, tags;
    for (int j = 0; j < len; ++j) {
      toks.push_back(pool[uniform_index(rng, pool.size())]);
      tags.push_back(j % 2 == 0 ? "ADJ" : "NOUN");
    }
    toy.batch.push_back(encode(toks, with_tags ? &tags : nullptr, toy.vocab,
                               with_tags ? &toy.tag_vocab : nullptr, max_len, min_len));
    toy.labels.push_back(i % 2);
  }
  return toy;
}

LabeledDataset make_dataset(int n, uint64_t seed) {
  LabeledDataset data;
  data.name = "toy";
  auto rng = substream(seed, "test.nn.data");
  for (int i = 0; i < n; ++i) {
    const auto& pool = i % 2 == 0 ? kCalm : kRough;
    const int len = 3 + static_cast<int>(uniform_index(rng, 4));
    Example ex;
    ex.label = i % 2;
    for (int j = 0; j < len; ++j) {
      ex.tokens.push_back(pool[uniform_index(rng, pool.size())]);
      ex.text += (j ? " " : "") + ex.tokens.back();
    }
    data.examples.push_back(std::move(ex));
  }
  return data;
}

ModelConfig small_config(Variant variant) {
  ModelConfig cfg;
  cfg.variant = variant;
  cfg.word_dim = 6;
  cfg.pos_dim = 4;
  cfg.filter_widths = {2, 3};
  cfg.filters_per_width = 3;
  cfg.merge_hidden = 5;
  cfg.dropout = 0.0;
  cfg.max_len = 8;
  cfg.seed = 2;
  return cfg;
}

double eval_accuracy_of(const Model& model, const LabeledDataset& data) {
  std::vector<EncodedSentence> batch;
  for (const Example& ex : data.examples) {
    batch.push_back(encode_for_model(model.cfg, model.vocab, model.tag_vocab, ex));
  }
  BatchResult<float> out = forward(model, batch, Mode::eval);
  int correct = 0;
  for (size_t i = 0; i < batch.size(); ++i) {
    if (out.predicted[i] == data.examples[i].label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(batch.size());
}

}  // namespace

TEST_CASE("conv_max_pool on a hand-built branch") {
  ModelConfig cfg;
  cfg.filter_widths = {1};
  cfg.filters_per_width = 1;

  Branch<double> b;
  b.dim = 2;
  b.embed.resize("embed", {4, 2});
  b.embed.value = {0, 0, 1, 0, 5, 0, 0, 2};  // PAD, then three words
  Tensor<double> k, bias;
  k.resize("k", {1, 2});
  k.value = {1.0, 0.0};  // picks out the first embedding coordinate
  bias.resize("b", {1});
  b.kernels.push_back(k);
  b.biases.push_back(bias);

  const std::vector<int> indices{1, 2, 3, 0};
  std::vector<double> pooled(1);
  std::vector<int> argmax(1);

  conv_max_pool(b, cfg, indices, 3, std::span<double>(pooled), std::span<int>(argmax));
  CHECK(pooled[0] == 5.0);  // word 2 at position 1 wins
  CHECK(argmax[0] == 1);

  SUBCASE("a zero kernel pools relu(bias) at the first position") {
    b.kernels[0].value = {0.0, 0.0};
    b.biases[0].value = {0.7};
    conv_max_pool(b, cfg, indices, 3, std::span<double>(pooled), std::span<int>(argmax));
    CHECK(pooled[0] == 0.7);
    CHECK(argmax[0] == 0);

    b.biases[0].value = {-0.7};
    conv_max_pool(b, cfg, indices, 3, std::span<double>(pooled), std::span<int>(argmax));
    CHECK(pooled[0] == 0.0);  // relu clips the whole map
    CHECK(argmax[0] == 0);
  }

  SUBCASE("size and length validation") {
    std::vector<double> wrong(2);
    std::vector<int> wrong_arg(2);
    CHECK(contains(error_message([&] {
            conv_max_pool(b, cfg, indices, 3, std::span<double>(wrong), std::span<int>(wrong_arg));
          }),
          "size mismatch"));
    CHECK(contains(error_message([&] {
            conv_max_pool(b, cfg, indices, 5, std::span<double>(pooled), std::span<int>(argmax));
          }),
          "exceeds"));
    cfg.filter_widths = {2};
    CHECK(contains(error_message([&] {
            conv_max_pool(b, cfg, indices, 1, std::span<double>(pooled), std::span<int>(argmax));
          }),
          "shorter than filter width"));
  }
}

TEST_CASE("softmax rows are normalized; zeroed head splits evenly") {
  Toy toy = make_toy(10, false, 8, 3, 41);
  Model model = Model::init(small_config(Variant::word_cnn), toy.vocab, toy.tag_vocab, nullptr);

  BatchResult<float> out = forward(model, toy.batch, Mode::eval);
  for (const auto& p : out.probs) {
    CHECK(p[0] > 0.0);
    CHECK(p[1] > 0.0);
    CHECK(std::abs(p[0] + p[1] - 1.0) <= 1e-9);
  }

  std::fill(model.out_w.value.begin(), model.out_w.value.end(), 0.0f);
  std::fill(model.out_b.value.begin(), model.out_b.value.end(), 0.0f);
  out = forward(model, toy.batch, Mode::eval);
  for (size_t i = 0; i < out.probs.size(); ++i) {
    CHECK(out.probs[i][0] == 0.5);
    CHECK(out.probs[i][1] == 0.5);
    CHECK(out.predicted[i] == 0);  // exact tie goes to class 0
  }

  CHECK(contains(error_message([&] { forward(model, {}, Mode::eval); }), "empty"));
}

TEST_CASE("batch_loss values and validation") {
  using Row = std::array<double, 2>;
  std::vector<Row> half{{0.5, 0.5}};
  CHECK(batch_loss(half, std::vector<int>{0}) == doctest::Approx(std::log(2.0)));

  std::vector<Row> sure{{1.0, 0.0}};
  CHECK(batch_loss(sure, std::vector<int>{1}) == doctest::Approx(-std::log(1e-12)));

  std::vector<Row> two{{0.5, 0.5}, {1.0, 0.0}};
  CHECK(batch_loss(two, std::vector<int>{0, 0}) == doctest::Approx(std::log(2.0) / 2.0));

  CHECK(contains(error_message([&] { batch_loss({}, std::vector<int>{}); }), "empty"));
  CHECK(contains(error_message([&] { batch_loss(half, std::vector<int>{0, 1}); }), "mismatch"));
  CHECK(contains(error_message([&] { batch_loss(half, std::vector<int>{2}); }), "out of range"));
}

TEST_CASE("adam: zero learning rate freezes values, first step moves by about lr") {
  Toy toy = make_toy(6, false, 8, 3, 42);
  ModelT<double> model =
      ModelT<double>::init(small_config(Variant::word_cnn), toy.vocab, toy.tag_vocab, nullptr);

  backward(model, toy.batch, toy.labels, nullptr);
  std::vector<std::vector<double>> before;
  for (const Tensor<double>* t : std::as_const(model).tensors()) before.push_back(t->value);

  adam_step(model, 0.0);
  {
    size_t i = 0;
    for (const Tensor<double>* t : std::as_const(model).tensors()) {
      CHECK(t->value == before[i]);
      ++i;
    }
  }

  // fresh gradients, one real step: |delta| == lr * |g| / (|g| + eps) ~ lr
  for (Tensor<double>* t : model.tensors()) {
    t->zero_grad();
    t->adam_m.assign(t->adam_m.size(), 0.0);
    t->adam_v.assign(t->adam_v.size(), 0.0);
  }
  model.adam_step = 0;
  backward(model, toy.batch, toy.labels, nullptr);
  std::vector<std::vector<double>> grads;
  before.clear();
  for (const Tensor<double>* t : std::as_const(model).tensors()) {
    before.push_back(t->value);
    grads.push_back(t->grad);
  }

  const double lr = 1e-3;
  adam_step(model, lr);
  size_t ti = 0;
  int moved = 0;
  for (const Tensor<double>* t : std::as_const(model).tensors()) {
    for (size_t i = 0; i < t->value.size(); ++i) {
      const double g = grads[ti][i];
      if (std::abs(g) < 1e-4) continue;
      const double delta = t->value[i] - before[ti][i];
      CHECK(std::abs(delta + lr * (g > 0 ? 1.0 : -1.0)) <= 0.02 * lr);
      ++moved;
    }
    ++ti;
  }
  CHECK(moved > 4);  // the check above must have had real work to do
}

TEST_CASE("repeated steps drive the training loss down") {
  Toy toy = make_toy(8, false, 8, 3, 43);
  Model model = Model::init(small_config(Variant::word_cnn), toy.vocab, toy.tag_vocab, nullptr);

  const double first = backward_and_step(model, toy.batch, toy.labels, 5e-3, nullptr);
  double last = first;
  for (int step = 0; step < 60; ++step) {
    last = backward_and_step(model, toy.batch, toy.labels, 5e-3, nullptr);
  }
  CHECK(last < 0.5 * first);

  BatchResult<float> out = forward(model, toy.batch, Mode::eval);
  CHECK(out.predicted == toy.labels);  // eight separable examples get memorized
}

TEST_CASE("analytic gradients agree with central differences") {
  SUBCASE("kink-free single-window model is accurate to 1e-6") {
    Toy toy = make_toy(1, false, 3, 3, 44);  // exactly one window per filter
    ModelConfig cfg = small_config(Variant::word_cnn);
    cfg.filter_widths = {3};
    cfg.max_len = 3;
    ModelT<double> model = ModelT<double>::init(cfg, toy.vocab, toy.tag_vocab, nullptr);
    for (Tensor<double>* t : model.tensors()) {
      if (t->name.find(".b") != std::string::npos && t->name.find("conv") != std::string::npos) {
        std::fill(t->value.begin(), t->value.end(), 1.0);  // keep every relu strictly open
      }
    }
    const double err = grad_check(model, toy.batch, toy.labels, 1e-5, 500, 7);
    CHECK(err < 1e-6);
  }

  SUBCASE("all three variants stay under the 1e-4 gate") {
    for (Variant variant : {Variant::word_cnn, Variant::pos_cnn, Variant::combined}) {
      CAPTURE(variant_name(variant));
      Toy toy = make_toy(5, true, 8, 3, 45);
      ModelT<double> model =
          ModelT<double>::init(small_config(variant), toy.vocab, toy.tag_vocab, nullptr);
      const double err = grad_check(model, toy.batch, toy.labels, 1e-5, 60, 7);
      CHECK(err < 1e-4);
    }
  }

  SUBCASE("parameter validation") {
    Toy toy = make_toy(2, false, 8, 3, 46);
    ModelT<double> model =
        ModelT<double>::init(small_config(Variant::word_cnn), toy.vocab, toy.tag_vocab, nullptr);
    CHECK(!error_message([&] { grad_check(model, toy.batch, toy.labels, 0.0, 10, 1); }).empty());
    CHECK(!error_message([&] { grad_check(model, toy.batch, toy.labels, 1e-5, 0, 1); }).empty());
  }
}

TEST_CASE("padding beyond true_length never changes the output") {
  Toy toy = make_toy(1, false, 8, 3, 47);
  Model model = Model::init(small_config(Variant::word_cnn), toy.vocab, toy.tag_vocab, nullptr);

  const std::vector<std::string> tokens{"calm", "soft", "quiet", "gentle", "calm"};
  EncodedSentence short_pad = encode(tokens, nullptr, model.vocab, nullptr, 64, 3);
  EncodedSentence long_pad = encode(tokens, nullptr, model.vocab, nullptr, 128, 3);
  REQUIRE(short_pad.true_length == long_pad.true_length);

  BatchResult<float> a = forward(model, std::vector<EncodedSentence>{short_pad}, Mode::eval);
  BatchResult<float> b = forward(model, std::vector<EncodedSentence>{long_pad}, Mode::eval);
  CHECK(a.logits[0] == b.logits[0]);  // bit-for-bit, not approximately
  CHECK(a.probs[0] == b.probs[0]);
}

TEST_CASE("frozen word embeddings stay put; trainable ones move but PAD is pinned") {
  Toy toy = make_toy(6, false, 8, 3, 48);

  ModelConfig cfg = small_config(Variant::word_cnn);
  cfg.train_word_embeddings = false;
  Model frozen = Model::init(cfg, toy.vocab, toy.tag_vocab, nullptr);
  for (Tensor<float>* t : frozen.tensors()) {
    if (t->name.find("conv") != std::string::npos && t->name.ends_with(".b")) {
      std::fill(t->value.begin(), t->value.end(), 0.5f);  // open the relus
    }
  }
  const std::vector<float> embed_before = frozen.word->embed.value;
  const std::vector<float> kernel_before = frozen.word->kernels[0].value;
  for (int step = 0; step < 3; ++step) {
    backward_and_step(frozen, toy.batch, toy.labels, 0.05, nullptr);
  }
  CHECK(frozen.word->embed.value == embed_before);
  CHECK(frozen.word->kernels[0].value != kernel_before);

  cfg.train_word_embeddings = true;
  Model live = Model::init(cfg, toy.vocab, toy.tag_vocab, nullptr);
  for (Tensor<float>* t : live.tensors()) {
    if (t->name.find("conv") != std::string::npos && t->name.ends_with(".b")) {
      std::fill(t->value.begin(), t->value.end(), 0.5f);
    }
  }
  const std::vector<float> live_before = live.word->embed.value;
  for (int step = 0; step < 3; ++step) {
    backward_and_step(live, toy.batch, toy.labels, 0.05, nullptr);
  }
  CHECK(live.word->embed.value != live_before);
  for (int j = 0; j < live.word->dim; ++j) {
    CHECK(live.word->embed.value[static_cast<size_t>(j)] == 0.0f);  // PAD row
  }
}

TEST_CASE("dropout: off means identical passes, on preserves the mean output") {
  Toy toy = make_toy(1, false, 8, 3, 49);

  ModelConfig cfg = small_config(Variant::word_cnn);
  cfg.dropout = 0.0;
  Model model = Model::init(cfg, toy.vocab, toy.tag_vocab, nullptr);
  auto rng = substream(5, "test.nn.dropout");
  BatchResult<float> train_pass = forward(model, toy.batch, Mode::train, &rng);
  BatchResult<float> eval_pass = forward(model, toy.batch, Mode::eval);
  CHECK(train_pass.logits[0] == eval_pass.logits[0]);

  cfg.dropout = 0.5;
  Model dropped = Model::init(cfg, toy.vocab, toy.tag_vocab, nullptr);
  const BatchResult<float> clean = forward(dropped, toy.batch, Mode::eval);

  // inverted dropout is unbiased and the word head is linear, so the mean
  // train-mode logit converges to the eval logit
  const int n_draws = 20000;
  std::array<double, 2> sum{0, 0}, sum_sq{0, 0};
  for (int i = 0; i < n_draws; ++i) {
    BatchResult<float> noisy = forward(dropped, toy.batch, Mode::train, &rng);
    for (int o = 0; o < 2; ++o) {
      const double v = noisy.logits[0][static_cast<size_t>(o)];
      sum[static_cast<size_t>(o)] += v;
      sum_sq[static_cast<size_t>(o)] += v * v;
    }
  }
  for (int o = 0; o < 2; ++o) {
    const double mean = sum[static_cast<size_t>(o)] / n_draws;
    const double var = sum_sq[static_cast<size_t>(o)] / n_draws - mean * mean;
    const double se = std::sqrt(std::max(var, 0.0) / n_draws);
    CHECK(std::abs(mean - clean.logits[0][static_cast<size_t>(o)]) <= 6.0 * se + 1e-5);
  }
}

TEST_CASE("train_model is deterministic and returns the best-eval parameters") {
  LabeledDataset train = make_dataset(40, 50);
  LabeledDataset eval = make_dataset(16, 51);

  ModelConfig cfg;
  cfg.variant = Variant::word_cnn;
  cfg.word_dim = 8;
  cfg.filter_widths = {2, 3};
  cfg.filters_per_width = 4;
  cfg.dropout = 0.3;
  cfg.max_len = 10;
  cfg.learning_rate = 1e-2;
  cfg.batch_size = 8;
  cfg.epochs = 6;
  cfg.seed = 11;

  TrainResult a = train_model(cfg, train, eval, nullptr);
  TrainResult b = train_model(cfg, train, eval, nullptr);

  REQUIRE(a.report.epochs.size() == 6);
  REQUIRE(b.report.epochs.size() == 6);
  for (size_t e = 0; e < a.report.epochs.size(); ++e) {
    CHECK(a.report.epochs[e].train_loss == b.report.epochs[e].train_loss);
    CHECK(a.report.epochs[e].train_accuracy == b.report.epochs[e].train_accuracy);
    CHECK(a.report.epochs[e].eval_accuracy == b.report.epochs[e].eval_accuracy);
  }
  CHECK(a.report.best_epoch == b.report.best_epoch);

  std::ostringstream bytes_a, bytes_b;
  save_cnn(a.model, bytes_a);
  save_cnn(b.model, bytes_b);
  CHECK(bytes_a.str() == bytes_b.str());

  // the returned parameters really are the snapshot from the best epoch
  CHECK(eval_accuracy_of(a.model, eval) == a.report.best_eval_accuracy);
  CHECK(a.report.best_eval_accuracy ==
        a.report.epochs[static_cast<size_t>(a.report.best_epoch)].eval_accuracy);
  CHECK(a.report.best_eval_accuracy >= 0.75);  // two disjoint word pools
  CHECK(a.report.epochs.back().train_loss < a.report.epochs.front().train_loss);
}

TEST_CASE("pretrained vectors enter the model bit-exact and survive freezing") {
  LabeledDataset train = make_dataset(20, 52);
  LabeledDataset eval = make_dataset(8, 53);

  EmbeddingTable table(8);
  table.insert("calm", {0.5f, -0.25f, 0.125f, 1.0f, -1.0f, 0.75f, 0.0f, 2.0f});

  ModelConfig cfg;
  cfg.variant = Variant::word_cnn;
  cfg.word_dim = 8;
  cfg.filter_widths = {2};
  cfg.filters_per_width = 3;
  cfg.dropout = 0.0;
  cfg.max_len = 10;
  cfg.epochs = 2;
  cfg.batch_size = 10;
  cfg.train_word_embeddings = false;
  cfg.seed = 13;

  TrainResult result = train_model(cfg, train, eval, &table);
  const int row = result.model.vocab.lookup("calm");
  REQUIRE(row >= 2);
  const std::vector<float>& want = *table.find("calm");
  for (int j = 0; j < 8; ++j) {
    CHECK(result.model.word->embed.value[static_cast<size_t>(row) * 8 + j] ==
          want[static_cast<size_t>(j)]);
  }
}

TEST_CASE("cnn serialization round-trips bit-exactly") {
  LabeledDataset train = make_dataset(20, 54);
  LabeledDataset eval = make_dataset(8, 55);
  ModelConfig cfg;
  cfg.variant = Variant::word_cnn;
  cfg.word_dim = 6;
  cfg.filter_widths = {2, 3};
  cfg.filters_per_width = 3;
  cfg.max_len = 10;
  cfg.epochs = 1;
  cfg.batch_size = 8;
  cfg.seed = 17;
  Model model = train_model(cfg, train, eval, nullptr).model;

  std::ostringstream first;
  save_cnn(model, first);
  std::istringstream in(first.str());
  Model back = load_cnn(in);

  std::ostringstream second;
  save_cnn(back, second);
  CHECK(second.str() == first.str());

  std::vector<EncodedSentence> batch;
  for (const Example& ex : eval.examples) {
    batch.push_back(encode_for_model(model.cfg, model.vocab, model.tag_vocab, ex));
  }
  BatchResult<float> a = forward(model, batch, Mode::eval);
  BatchResult<float> b = forward(back, batch, Mode::eval);
  for (size_t i = 0; i < batch.size(); ++i) CHECK(a.logits[i] == b.logits[i]);

  std::istringstream garbage("not a model\n");
  CHECK(contains(error_message([&] { load_cnn(garbage); }), "header"));

  std::string cut = first.str();
  cut.resize(cut.rfind("end"));
  std::istringstream truncated(cut);
  CHECK(contains(error_message([&] { load_cnn(truncated); }), "truncated"));
}

TEST_CASE("pos variants demand tagged input") {
  Toy tagged = make_toy(4, true, 8, 3, 56);
  Toy untagged = make_toy(4, false, 8, 3, 56);

  for (Variant variant : {Variant::pos_cnn, Variant::combined}) {
    Model model = Model::init(small_config(variant), tagged.vocab, tagged.tag_vocab, nullptr);
    CHECK(forward(model, tagged.batch, Mode::eval).predicted.size() == 4);
    CHECK(contains(error_message([&] { forward(model, untagged.batch, Mode::eval); }),
                   "POS-tagged input"));
  }
}

TEST_CASE("encode_for_model raises short sentences to the largest filter width") {
  ModelConfig cfg;
  cfg.variant = Variant::word_cnn;
  cfg.filter_widths = {2, 5};
  cfg.max_len = 16;

  Vocabulary vocab;
  vocab.add("hello");
  Vocabulary tags;

  Example ex;
  ex.tokens = {"hello"};
  EncodedSentence enc = encode_for_model(cfg, vocab, tags, ex);
  CHECK(enc.true_length == 5);
  CHECK(enc.indices.size() == 16);
  CHECK(enc.pos_indices.empty());  // the word variant never encodes tags

  cfg.variant = Variant::combined;
  CHECK(contains(error_message([&] { encode_for_model(cfg, vocab, tags, ex); }),
                 "POS-tagged input"));
}

TEST_CASE("model configuration is validated at init") {
  Toy toy = make_toy(1, false, 8, 3, 57);
  ModelConfig cfg = small_config(Variant::word_cnn);
  cfg.dropout = 1.0;
  CHECK(contains(error_message([&] { Model::init(cfg, toy.vocab, toy.tag_vocab, nullptr); }),
                 "dropout"));
  cfg = small_config(Variant::word_cnn);
  cfg.filter_widths = {};
  CHECK(!error_message([&] { Model::init(cfg, toy.vocab, toy.tag_vocab, nullptr); }).empty());
  cfg = small_config(Variant::word_cnn);
  cfg.filter_widths = {9};
  cfg.max_len = 5;
  CHECK(contains(error_message([&] { Model::init(cfg, toy.vocab, toy.tag_vocab, nullptr); }),
                 "max_len"));
}
