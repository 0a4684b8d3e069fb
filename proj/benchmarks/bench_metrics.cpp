#include <benchmark/benchmark.h>

#include "sdq/metrics.hpp"

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  sdq::Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

void BM_PairwiseAccuracy(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto s = noise(n, 1), t = noise(n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(sdq::pairwise_accuracy(s, t, 0));
}

void BM_Spearman(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto s = noise(n, 1), t = noise(n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(sdq::spearman(s, t));
}

void BM_Swiss(benchmark::State& state) {
  const auto scores = noise(static_cast<std::size_t>(state.range(0)), 3);
  std::vector<sdq::RankItem> items;
  for (std::size_t i = 0; i < scores.size(); ++i) items.push_back({std::to_string(i), scores[i]});
  const auto beats = sdq::scalar_comparator(items);
  for (auto _ : state) benchmark::DoNotOptimize(sdq::swiss_rank(items, beats, 8));
}

}  // namespace

BENCHMARK(BM_PairwiseAccuracy)->Arg(1000)->Arg(100000);
BENCHMARK(BM_Spearman)->Arg(1000)->Arg(100000);
BENCHMARK(BM_Swiss)->Arg(64)->Arg(1024);
