#include <benchmark/benchmark.h>

#include "sdq/scoremodel.hpp"

namespace {

std::vector<sdq::EmbeddedExample> random_examples(std::size_t n, std::size_t context, sdq::Rng& rng) {
  std::vector<sdq::EmbeddedExample> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& ex = out[i];
    ex.paper_id = std::to_string(i);
    ex.paper_embedding.resize(sdq::kEmbeddingDim);
    for (auto& v : ex.paper_embedding) v = static_cast<float>(rng.normal());
    ex.context_embeddings.assign(context, ex.paper_embedding);
    ex.target = rng.normal();
  }
  return out;
}

// One optimizer step of the pairwise objective; range(0) is the batch size.
void train_step(benchmark::State& state, sdq::ModelKind kind, std::size_t context) {
  sdq::Rng rng(1);
  sdq::ScoreArchitecture arch;
  arch.kind = kind;
  auto model = sdq::ScoreModel::create(arch, 1);
  const auto batch = random_examples(static_cast<std::size_t>(state.range(0)), context, rng);
  std::vector<const sdq::EmbeddedExample*> ptrs;
  std::vector<double> targets;
  for (const auto& ex : batch) {
    ptrs.push_back(&ex);
    targets.push_back(*ex.target);
  }
  const auto pairs = sdq::make_pairs(targets, 2, batch.size());
  for (auto _ : state) {
    sdq::Tape<float> tape;
    const auto scores = sdq::score_graph<float>(tape, model.params, arch, 0.3, ptrs, true, rng);
    const auto loss = sdq::ops::pairwise_bce(tape, scores, pairs);
    tape.backward(loss);
    sdq::adam_step(model.params, sdq::AdamConfig{5e-5});
    benchmark::DoNotOptimize(tape.scalar(loss));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_NoContextStep(benchmark::State& state) { train_step(state, sdq::ModelKind::NoContext, 0); }
void BM_ContextStep(benchmark::State& state) { train_step(state, sdq::ModelKind::Context, 8); }

void BM_Predict(benchmark::State& state) {
  sdq::Rng rng(3);
  const auto model = sdq::ScoreModel::create({}, 1);
  const auto xs = random_examples(static_cast<std::size_t>(state.range(0)), 0, rng);
  for (auto _ : state) benchmark::DoNotOptimize(model.predict_batch(xs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_NoContextStep)->Arg(32)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ContextStep)->Arg(16)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Predict)->Arg(1024)->Unit(benchmark::kMillisecond);
