#include <doctest.h>

#include <cmath>
#include <map>

#include <algorithm>

#include "sdq/binary_io.hpp"
#include "sdq/embed.hpp"
#include "sdq/error.hpp"
#include "sdq/metrics.hpp"
#include "sdq/scoremodel.hpp"
#include "synthetic.hpp"

using namespace sdq;
using sdq::testing::TempDir;

namespace {

ScoreArchitecture small_arch(ModelKind kind) {
  ScoreArchitecture a;
  a.kind = kind;
  a.dim = 16;
  a.mlp_hidden = 8;
  a.ff_hidden = 16;
  return a;
}

EmbeddedExample random_example(std::size_t i, std::size_t dim, std::size_t n_ctx, Rng& rng) {
  EmbeddedExample ex;
  ex.paper_id = "e" + std::to_string(i);
  ex.publication_date = {2020, 1};
  ex.paper_embedding.resize(dim);
  for (auto& v : ex.paper_embedding) v = static_cast<float>(rng.normal());
  for (std::size_t c = 0; c < n_ctx; ++c) {
    EmbeddingVector e(dim);
    for (auto& v : e) v = static_cast<float>(rng.normal());
    ex.context_embeddings.push_back(std::move(e));
  }
  ex.target = rng.normal();
  return ex;
}

const sdq::testing::PlantedSignal& small_planted() {
  static const auto data = [] {
    DeterministicEmbedder e(7, 16);
    return sdq::testing::planted_signal(e, 300, 100, 100, 3, 200, 20);
  }();
  return data;
}

}  // namespace

TEST_SUITE("scoremodel") {
  TEST_CASE("pairwise and regression losses") {
    CHECK(pairwise_loss(0.4, 0.4, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(pairwise_loss(std::log(3.0), 0.0, 1) == doctest::Approx(-std::log(0.75)).epsilon(1e-12));
    Rng rng(1);
    for (int i = 0; i < 50; ++i) {
      const double a = rng.normal() * 5, b = rng.normal() * 5;
      CHECK(pairwise_loss(a, b, 1) == doctest::Approx(pairwise_loss(b, a, 0)).epsilon(1e-12));
    }
    CHECK(std::isfinite(pairwise_loss(1000.0, -1000.0, 0)));
    CHECK(regression_loss(0.5, 0.5) == 0.0);
    CHECK(regression_loss(0.2, 0.5) == doctest::Approx(0.3));
    CHECK((regression_loss(0, 1) + regression_loss(1, 1)) / 2 == 0.5);
  }

  TEST_CASE("make_pairs") {
    const std::vector<double> two = {0.9, 0.1};
    const auto p = make_pairs(two, 1, 5);
    for (const auto& x : p) {
      CHECK(x.first == 0);
      CHECK(x.second == 1);
      CHECK(x.label == 1);
    }
    const std::vector<double> equal = {0.5, 0.5, 0.5};
    CHECK_THROWS_AS(make_pairs(equal, 1, 3), ValidationError);

    // Uniform over the 45 unordered pairs: chi-square with 44 degrees of
    // freedom stays under its 0.99 quantile, 68.710.
    std::vector<double> ten(10);
    for (int i = 0; i < 10; ++i) ten[i] = i * 0.1;
    std::map<std::pair<std::size_t, std::size_t>, int> counts;
    for (const auto& x : make_pairs(ten, 12, 1000)) {
      CHECK(x.first < x.second);
      CHECK(x.label == (ten[x.first] > ten[x.second] ? 1 : 0));
      ++counts[{x.first, x.second}];
    }
    const double expected = 1000.0 / 45.0;
    double chi2 = 0.0;
    for (std::size_t a = 0; a < 10; ++a) {
      for (std::size_t b = a + 1; b < 10; ++b) {
        const double o = counts[{a, b}];
        chi2 += (o - expected) * (o - expected) / expected;
      }
    }
    CHECK(chi2 < 68.710);
    CHECK(make_pairs(ten, 4, 50).size() == 50);
  }

  TEST_CASE("zero model predicts zero; context order does not matter") {
    Rng rng(2);
    auto zero = ScoreModel::create(small_arch(ModelKind::NoContext), 1);
    zero.params.fill_values(0.0f);
    for (int i = 0; i < 5; ++i) CHECK(zero.predict(random_example(i, 16, 0, rng)) == 0.0);

    const auto ctx = ScoreModel::create(small_arch(ModelKind::Context), 3);
    auto ex = random_example(0, 16, 6, rng);
    const double base = ctx.predict(ex);
    for (int s = 0; s < 20; ++s) {
      sdq::shuffle(ex.context_embeddings.begin(), ex.context_embeddings.end(), rng);
      CHECK(ctx.predict(ex) == doctest::Approx(base).epsilon(1e-6));
    }
    auto empty = random_example(1, 16, 0, rng);
    CHECK(ctx.predict(empty) == ctx.predict(empty));
  }

  TEST_CASE("batched prediction equals one at a time") {
    Rng rng(3);
    const auto m = ScoreModel::create(small_arch(ModelKind::Context), 5);
    std::vector<EmbeddedExample> xs;
    for (std::size_t i = 0; i < 9; ++i) xs.push_back(random_example(i, 16, i % 4, rng));
    const auto batched = m.predict_batch(xs, 4);
    for (std::size_t i = 0; i < xs.size(); ++i) CHECK(batched[i] == doctest::Approx(m.predict(xs[i])).epsilon(1e-5));
  }

  TEST_CASE("save and load keep predictions and metadata") {
    TempDir dir("model");
    Rng rng(4);
    auto m = ScoreModel::create(small_arch(ModelKind::Context), 6, "stub:x");
    m.target_kind = TargetKind::ImpactMean;
    m.representation_kind = RepresentationKind::Hypothesis;
    m.context_kind = ContextKind::FullPaperSections;
    m.save(dir / "m.sdqc");
    const auto back = ScoreModel::load(dir / "m.sdqc");
    CHECK(back.provider_id == "stub:x");
    CHECK(back.target_kind == TargetKind::ImpactMean);
    CHECK(back.representation_kind == RepresentationKind::Hypothesis);
    CHECK(back.context_kind == ContextKind::FullPaperSections);
    const auto ex = random_example(0, 16, 2, rng);
    CHECK(back.predict(ex) == m.predict(ex));
    CHECK_THROWS(ScoreModel::load(dir / "missing.sdqc"));
  }

  TEST_CASE("train: zero epochs returns the initial model") {
    const auto& d = small_planted();
    const auto init = ScoreModel::create(small_arch(ModelKind::NoContext), 1);
    TrainConfig c;
    c.epochs = 0;
    const auto r = train(init, d.train, d.validation, c);
    CHECK(r.history.empty());
    CHECK(r.best_epoch == 0);
    CHECK(r.best.params.value("mlp.w1") == init.params.value("mlp.w1"));
  }

  TEST_CASE("train: steadily improving run keeps the last epoch, and is reproducible") {
    const auto& d = small_planted();
    const auto init = ScoreModel::create(small_arch(ModelKind::NoContext), 1);
    TrainConfig c;
    c.epochs = 6;
    c.learning_rate = 1e-3;
    c.dropout = 0.0;
    c.batch_size = 32;
    const auto r = train(init, d.train, d.validation, c);
    REQUIRE(r.history.size() == 6);
    bool monotone = true;
    for (std::size_t i = 1; i < r.history.size(); ++i) monotone &= r.history[i].val_loss < r.history[i - 1].val_loss;
    REQUIRE(monotone);
    CHECK(r.best_epoch == 6);
    CHECK(r.best_val_loss == r.history.back().val_loss);
    const auto again = train(init, d.train, d.validation, c);
    CHECK(again.best.params.value("mlp.w1") == r.best.params.value("mlp.w1"));
    CHECK_FALSE(r.best.config_hash.empty());
  }

  TEST_CASE("train: regression objective and context models run") {
    const auto& d = small_planted();
    TrainConfig c;
    c.epochs = 3;
    c.learning_rate = 1e-3;
    c.objective = Objective::Regression;
    const auto r = train(ScoreModel::create(small_arch(ModelKind::NoContext), 2), d.train, d.validation, c);
    CHECK(r.history.size() == 3);
    CHECK(r.best_val_loss < validation_loss(ScoreModel::create(small_arch(ModelKind::NoContext), 2), d.validation,
                                            Objective::Regression, 0));

    Rng rng(9);
    std::vector<EmbeddedExample> tr, va;
    for (std::size_t i = 0; i < 40; ++i) tr.push_back(random_example(i, 16, i % 3, rng));
    for (std::size_t i = 40; i < 50; ++i) va.push_back(random_example(i, 16, i % 3, rng));
    c.objective = Objective::Pairwise;
    auto ctx = ScoreModel::create(small_arch(ModelKind::Context), 2);
    ctx.context_kind = ContextKind::ReferenceTitlesAbstracts;
    CHECK(train(ctx, tr, va, c).history.size() == 3);
  }

  TEST_CASE("train: input errors") {
    const auto& d = small_planted();
    const auto init = ScoreModel::create(small_arch(ModelKind::NoContext), 1);
    TrainConfig c;
    c.epochs = 1;
    CHECK_THROWS_AS(train(init, d.train, d.train, c), ValidationError);
    c.learning_rate = -1;
    CHECK_THROWS_AS(train(init, d.train, d.validation, c), ValidationError);
    c.learning_rate = 1e-3;
    auto bad = d.train;
    bad[0].target.reset();
    CHECK_THROWS(train(init, bad, d.validation, c));
  }

  TEST_CASE("grid search") {
    const auto& d = small_planted();
    const auto init = ScoreModel::create(small_arch(ModelKind::NoContext), 1);
    TrainConfig c;
    c.epochs = 2;
    c.batch_size = 64;
    c.grid_learning_rates = {1e-3};
    c.grid_dropouts = {0.1};
    const auto one = grid_search(init, d.train, d.validation, c);
    TrainConfig plain = c;
    plain.learning_rate = 1e-3;
    plain.dropout = 0.1;
    const auto direct = train(init, d.train, d.validation, plain);
    CHECK(one.cells.size() == 1);
    CHECK(one.best.best.params.value("mlp.w1") == direct.best.params.value("mlp.w1"));

    c.epochs = 1;
    c.grid_learning_rates = TrainConfig{}.grid_learning_rates;
    c.grid_dropouts = TrainConfig{}.grid_dropouts;
    const auto full = grid_search(init, d.train, d.validation, c);
    CHECK(full.cells.size() == 24);

    c.epochs = 5;
    c.grid_learning_rates = {10.0, 1e-3};
    c.grid_dropouts = {0.0};
    const auto absurd = grid_search(init, d.train, d.validation, c);
    CHECK(absurd.best_learning_rate == 1e-3);
  }

  TEST_CASE("train config json") {
    TrainConfig c;
    c.learning_rate = 1e-3;
    c.pairs_per_epoch = 77;
    const auto back = TrainConfig::from_json(c.to_json(), TrainConfig{});
    CHECK(back.to_json() == c.to_json());
    CHECK_THROWS(TrainConfig::from_json({{"learning_rte", 1}}, TrainConfig{}));
    CHECK(TrainConfig::defaults_for(ModelKind::Context).epochs == 50);
    CHECK(TrainConfig::defaults_for(ModelKind::Context).batch_size == 128);
    CHECK(TrainConfig::defaults_for(ModelKind::NoContext).epochs == 100);
  }

  TEST_CASE("history jsonl") {
    TempDir dir("hist");
    write_history_jsonl(dir / "h.jsonl", {{1, 0.7, 0.69}, {2, 0.6, 0.65}});
    const auto text = io::read_file(dir / "h.jsonl");
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);
    CHECK(nlohmann::json::parse(text.substr(0, text.find('\n')))["epoch"] == 1);
  }
}
