#include <benchmark/benchmark.h>

#include "sentclass/harness.hpp"
#include "sentclass/nn.hpp"
#include "sentclass/rng.hpp"

namespace {

struct Fixture {
  sentclass::Model model;
  std::vector<sentclass::EncodedSentence> batch;
  std::vector<int> labels;

  explicit Fixture(sentclass::Variant variant) {
    const sentclass::SynthData sd = sentclass::synth_aggression(64, 11);
    sentclass::ModelConfig cfg;
    cfg.variant = variant;
    cfg.word_dim = 50;
    cfg.pos_dim = 16;
    cfg.seed = 11;
    model = sentclass::Model::init(cfg, sentclass::build_vocab(sd.data, 1),
                                   sentclass::build_tag_vocab(sd.data), nullptr);
    for (int i = 0; i < 32; ++i) {
      const sentclass::Example& ex = sd.data.examples[static_cast<size_t>(i)];
      batch.push_back(sentclass::encode_for_model(cfg, model.vocab, model.tag_vocab, ex));
      labels.push_back(ex.label);
    }
  }
};

void BM_ForwardWordCnn(benchmark::State& state) {
  static Fixture f(sentclass::Variant::word_cnn);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sentclass::forward(f.model, f.batch, sentclass::Mode::eval));
  }
}
BENCHMARK(BM_ForwardWordCnn);

void BM_ForwardCombined(benchmark::State& state) {
  static Fixture f(sentclass::Variant::combined);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sentclass::forward(f.model, f.batch, sentclass::Mode::eval));
  }
}
BENCHMARK(BM_ForwardCombined);

void BM_TrainStepWordCnn(benchmark::State& state) {
  static Fixture f(sentclass::Variant::word_cnn);
  auto rng = sentclass::substream(11, "bench.dropout");
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        sentclass::backward_and_step(f.model, f.batch, f.labels, 1e-3, &rng));
  }
}
BENCHMARK(BM_TrainStepWordCnn);

}  // namespace

BENCHMARK_MAIN();
