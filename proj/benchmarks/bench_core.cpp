#include "saldl/label_distribution.hpp"
#include "saldl/model.hpp"
#include "saldl/staging.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

using namespace saldl;

namespace {

const LabelSupport kAges(0, 100);

Logits random_logits(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 2.0);
  Logits z;
  for (std::size_t k = 0; k < kAges.size(); ++k) z.values.push_back(normal(rng));
  return z;
}

std::vector<Sample> random_batch(std::size_t n, std::size_t dim) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> label(0, 100);
  std::vector<Sample> batch(n);
  for (auto& s : batch) {
    for (std::size_t f = 0; f < dim; ++f) s.features.push_back(normal(rng));
    s.label = label(rng);
  }
  return batch;
}

void BM_GaussianTarget(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(gaussian_label_distribution(42, 2.5, kAges));
}
BENCHMARK(BM_GaussianTarget);

void BM_Softmax(benchmark::State& state) {
  const Logits z = random_logits(1);
  for (auto _ : state) benchmark::DoNotOptimize(softmax(z, kAges));
}
BENCHMARK(BM_Softmax);

void BM_SawGradient(benchmark::State& state) {
  const Logits z = random_logits(2);
  for (auto _ : state) benchmark::DoNotOptimize(saw_gradient_logits(z, 42, 2.5, 0.6, kAges));
}
BENCHMARK(BM_SawGradient);

void BM_KMeans1d(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> label(0, 100);
  std::vector<int> labels(static_cast<std::size_t>(state.range(0)));
  for (int& l : labels) l = label(rng);
  for (auto _ : state) benchmark::DoNotOptimize(kmeans_1d(labels, 10, kAges));
}
BENCHMARK(BM_KMeans1d)->Arg(1000)->Arg(50000);

void BM_BatchForwardBackward(benchmark::State& state) {
  const auto model = init_model({16, 64, 32, 101}, Activation::relu, 1, kAges);
  const auto batch = random_batch(static_cast<std::size_t>(state.range(0)), 16);
  const auto partition = decade_partition(kAges);
  const auto params = StageParams::initial(partition.k());
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate_batch(model, batch, params, partition, LossMode::saw));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BatchForwardBackward)->Arg(1)->Arg(32);

}  // namespace

BENCHMARK_MAIN();
