#include <benchmark/benchmark.h>

#include "sentclass/text.hpp"

namespace {

const std::string kLine =
    "the quick (brown) fox, jumped... over the \"lazy\" dog's back -- didn't it?!";

void BM_Tokenize(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(sentclass::tokenize(kLine));
  }
}
BENCHMARK(BM_Tokenize);

void BM_TagSentence(benchmark::State& state) {
  const sentclass::PosTagger tagger;
  const std::vector<std::string> tokens = sentclass::tokenize(kLine);
  for (auto _ : state) {
    benchmark::DoNotOptimize(tagger.tag(tokens));
  }
}
BENCHMARK(BM_TagSentence);

void BM_Encode(benchmark::State& state) {
  sentclass::LabeledDataset ds;
  sentclass::Example ex;
  ex.text = kLine;
  ex.tokens = sentclass::tokenize(kLine);
  ds.examples.assign(64, ex);
  const sentclass::Vocabulary vocab = sentclass::build_vocab(ds, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sentclass::encode(ex.tokens, nullptr, vocab, nullptr, 64, 5));
  }
}
BENCHMARK(BM_Encode);

}  // namespace

BENCHMARK_MAIN();
