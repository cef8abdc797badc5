#include <benchmark/benchmark.h>

#include <map>
#include <random>

#include "triplescore/gbrt.h"
#include "triplescore/metrics.h"
#include "triplescore/neuralnet.h"

namespace triplescore {
namespace {

Vocabulary Numbered(const std::string& prefix, int n) {
  std::map<std::string, int64_t> counts;
  for (int i = 0; i < n; ++i) counts[prefix + std::to_string(i)] = n - i;
  return Vocabulary::FromCounts(counts, 1);
}

ClassifierModel Model(int d_w, int hidden) {
  ClassifierConfig config;
  config.embedding_dim = d_w;
  config.attention_dim = 8;
  config.hidden_units = hidden;
  config.seed = 1;
  return ClassifierModel::Initialize(config, {Numbered("w", 2000), Numbered("E", 500)},
                                     {"A", "B", "C", "D", "E"});
}

std::vector<TrainingExample> Batch(int n, int items, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int32_t> word(0, 1999);
  std::uniform_int_distribution<int32_t> entity(0, 499);
  std::vector<TrainingExample> batch(n);
  for (int i = 0; i < n; ++i) {
    std::vector<int32_t> w;
    std::vector<int32_t> e;
    for (int k = 0; k < items; ++k) w.push_back(word(rng));
    for (int k = 0; k < items / 4 + 1; ++k) e.push_back(entity(rng));
    batch[i].bags = {ItemBag(w), ItemBag(e)};
    batch[i].label = i % 5;
  }
  return batch;
}

void BM_ForwardBackward(benchmark::State& state) {
  const auto model = Model(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  const auto batch = Batch(100, 60, 2);
  std::mt19937_64 rng(3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        ComputeLossAndGradients(batch, model, {}, ForwardMode::kTrain, &rng).loss);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(batch.size()));
}
BENCHMARK(BM_ForwardBackward)->Args({32, 64})->Args({100, 500})->Args({300, 2000});

void BM_Predict(benchmark::State& state) {
  const auto model = Model(static_cast<int>(state.range(0)), 500);
  const auto batch = Batch(1, 200, 4);
  for (auto _ : state) benchmark::DoNotOptimize(Predict(model, batch[0].bags).probs);
}
BENCHMARK(BM_Predict)->Arg(32)->Arg(300);

FeatureMatrix RandomMatrix(size_t rows, size_t cols, std::vector<double>* y) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  FeatureMatrix x(0, cols);
  std::vector<double> row(cols);
  for (size_t r = 0; r < rows; ++r) {
    for (auto& v : row) v = u(rng);
    x.AppendRow(row);
    y->push_back(std::round(7.0 * (0.6 * row[0] + 0.4 * row[1 % cols])));
  }
  return x;
}

void BM_FitTree(benchmark::State& state) {
  std::vector<double> y;
  const auto x = RandomMatrix(static_cast<size_t>(state.range(0)), 29, &y);
  GbrtConfig config;
  for (auto _ : state) benchmark::DoNotOptimize(FitTree(x, y, config).nodes().size());
}
BENCHMARK(BM_FitTree)->Arg(500)->Arg(5000);

void BM_FitRegression(benchmark::State& state) {
  std::vector<double> y;
  const auto x = RandomMatrix(2000, 29, &y);
  GbrtConfig config;
  config.n_trees = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(FitRegression(x, y, config).trees.size());
}
BENCHMARK(BM_FitRegression)->Arg(100);

void BM_KendallTau(benchmark::State& state) {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> score(0, 7);
  std::vector<int> pred(static_cast<size_t>(state.range(0)));
  std::vector<int> truth(pred.size());
  for (auto& v : pred) v = score(rng);
  for (auto& v : truth) v = score(rng);
  for (auto _ : state) benchmark::DoNotOptimize(KendallTauEntity(pred, truth));
}
BENCHMARK(BM_KendallTau)->Arg(5)->Arg(50);

}  // namespace
}  // namespace triplescore

BENCHMARK_MAIN();
