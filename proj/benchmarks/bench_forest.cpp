#include <benchmark/benchmark.h>

#include "sentclass/features.hpp"
#include "sentclass/forest.hpp"
#include "sentclass/harness.hpp"

namespace {

struct Fixture {
  sentclass::FeatureMatrix features;
  std::vector<int> labels;

  Fixture() {
    const sentclass::SynthData sd = sentclass::synth_aggression(1000, 7);
    const sentclass::SeedLexicon lexicon =
        sentclass::build_lexicon({"agg000", "agg001", "agg002"}, sd.table);
    auto pair = sentclass::featurize_dataset(sd.data, lexicon, sd.table);
    features = std::move(pair.first);
    labels = std::move(pair.second);
  }
};

const Fixture& fixture() {
  static Fixture f;
  return f;
}

void BM_BestSplit(benchmark::State& state) {
  const Fixture& f = fixture();
  std::vector<int> indices(static_cast<size_t>(f.features.n_rows));
  for (size_t i = 0; i < indices.size(); ++i) indices[i] = static_cast<int>(i);
  const std::vector<int> subset{0, 1, 2, 3};
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        sentclass::best_split(f.features, f.labels, indices, subset, 1));
  }
}
BENCHMARK(BM_BestSplit);

void BM_TrainForest(benchmark::State& state) {
  const Fixture& f = fixture();
  sentclass::ForestConfig config;
  config.n_trees = static_cast<int>(state.range(0));
  config.seed = 7;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sentclass::train_forest(f.features, f.labels, config));
  }
}
BENCHMARK(BM_TrainForest)->Arg(10)->Arg(50);

void BM_PredictForest(benchmark::State& state) {
  const Fixture& f = fixture();
  sentclass::ForestConfig config;
  config.seed = 7;
  const sentclass::Forest forest = sentclass::train_forest(f.features, f.labels, config);
  const double* row = f.features.row(0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        sentclass::predict_forest(forest, std::span<const double>(row, 4)));
  }
}
BENCHMARK(BM_PredictForest);

}  // namespace

BENCHMARK_MAIN();
