#include <benchmark/benchmark.h>

#include "sdq/embed.hpp"
#include "sdq/rng.hpp"

namespace {

std::string document(std::size_t sentences) {
  sdq::Rng rng(5);
  std::string text;
  for (std::size_t s = 0; s < sentences; ++s) {
    text += "Sentence";
    for (int w = 0; w < 20; ++w) text += " w" + std::to_string(rng.below(5000));
    text += s % 7 == 0 ? " as in Fig. 3 of Smith et al. here. " : ". ";
  }
  return text;
}

void BM_Segment(benchmark::State& state) {
  const auto text = document(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(sdq::segment_sentences(text));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}

void BM_EmbedText(benchmark::State& state) {
  const sdq::DeterministicEmbedder embedder(1);
  const auto text = document(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(sdq::embed_text(text, embedder));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}

}  // namespace

BENCHMARK(BM_Segment)->Arg(10)->Arg(200);
BENCHMARK(BM_EmbedText)->Arg(10)->Arg(200);
