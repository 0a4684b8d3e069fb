#include <benchmark/benchmark.h>

#include "sdq/rng.hpp"
#include "sdq/topics.hpp"

namespace {

std::vector<std::vector<std::string>> docs(std::size_t n) {
  sdq::Rng rng(4);
  std::vector<std::vector<std::string>> out(n);
  for (auto& d : out) {
    for (int i = 0; i < 120; ++i) d.push_back("t" + std::to_string(rng.below(3000)));
  }
  return out;
}

// range(0) documents of 120 tokens, 13 topics, 10 sweeps per iteration.
void BM_GibbsSweeps(benchmark::State& state) {
  const auto corpus = docs(static_cast<std::size_t>(state.range(0)));
  sdq::LdaConfig c;
  c.iterations = 10;
  for (auto _ : state) benchmark::DoNotOptimize(sdq::fit_lda(corpus, c));
  state.SetItemsProcessed(state.iterations() * state.range(0) * 120 * 10);
}

void BM_Preprocess(benchmark::State& state) {
  const std::string title = "Learning Representations of Graphs with Attention Networks";
  const std::string abstract =
      "We propose graph attention networks, novel neural network architectures that operate on graph-structured "
      "data, leveraging masked self-attentional layers to address the shortcomings of prior methods based on "
      "graph convolutions or their approximations.";
  for (auto _ : state) benchmark::DoNotOptimize(sdq::preprocess(title, abstract));
}

}  // namespace

BENCHMARK(BM_GibbsSweeps)->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Preprocess);
