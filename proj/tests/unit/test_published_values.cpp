// Shipped defaults, checked against the tables in paper.md.
#include <doctest.h>

#include <algorithm>
#include <cctype>

#include "sdq/binary_io.hpp"
#include "sdq/harmonize.hpp"
#include "sdq/scoremodel.hpp"
#include "sdq/sections.hpp"
#include "sdq/topics.hpp"

using namespace sdq;

namespace {

const std::string& source_text() {
  static const std::string text = io::read_file(std::filesystem::path(SDQ_SOURCE_DIR) / "paper.md");
  return text;
}

bool mentions(const std::string& needle) { return source_text().find(needle) != std::string::npos; }

// "Batch Size & 256" style table rows, tolerant to spacing.
bool table_row(const std::string& key, const std::string& value) {
  const auto& t = source_text();
  for (auto pos = t.find(key); pos != std::string::npos; pos = t.find(key, pos + 1)) {
    auto amp = t.find('&', pos);
    if (amp == std::string::npos || amp - pos > key.size() + 4) continue;
    auto v = amp + 1;
    while (v < t.size() && std::isspace(static_cast<unsigned char>(t[v]))) ++v;
    if (t.compare(v, value.size(), value) == 0) return true;
  }
  return false;
}

}  // namespace

TEST_SUITE("published-values") {
  TEST_CASE("score model training defaults") {
    const auto nc = TrainConfig::defaults_for(ModelKind::NoContext);
    CHECK(nc.learning_rate == 0.00005);
    CHECK(nc.dropout == 0.3);
    CHECK(nc.epochs == 100);
    CHECK(nc.batch_size == 256);
    CHECK(table_row("Learning rate", "0.00005"));
    CHECK(table_row("Epochs", "100"));
    CHECK(table_row("Batch Size", "256"));

    const auto ctx = TrainConfig::defaults_for(ModelKind::Context);
    CHECK(ctx.epochs == 50);
    CHECK(ctx.batch_size == 128);
    CHECK(table_row("Epochs", "50"));
    CHECK(table_row("Batch Size", "128"));

    CHECK(nc.grid_learning_rates == std::vector<double>{0.0001, 0.001, 0.0005, 0.00005});
    CHECK(mentions("$[0.0001,0.001,0.0005,0.00005]$"));
    CHECK(nc.grid_dropouts == std::vector<double>{0, 0.1, 0.2, 0.3, 0.4, 0.5});
    CHECK(mentions("$[0,0.1,0.2,0.3,0.4,0.5]$"));
  }

  TEST_CASE("score model architecture") {
    const ScoreArchitecture a;
    CHECK(a.mlp_hidden == 256);
    CHECK(a.dim == 768);
    CHECK(a.heads == 1);
    CHECK(a.ff_hidden == 1024);
    CHECK(mentions("MLP with 256 hidden units"));
    CHECK(mentions("embeddings of size 768"));
    CHECK(mentions("with one head"));
    CHECK(mentions("hidden units of size 1024"));
  }

  TEST_CASE("section classifier defaults") {
    const SectionClassifierConfig c;
    CHECK(c.layers == 2);
    CHECK(c.heads == 8);
    CHECK(c.ff_hidden == 1024);
    CHECK(c.dropout == 0.3);
    CHECK(c.learning_rate == 0.0001);
    CHECK(c.batch_size == 128);
    CHECK(c.epochs == 20);
    CHECK(mentions("two transformer encoder layers with dropout $0.3$, hidden dimension of 1024 and eight heads"));
    CHECK(table_row("Learning Rate", "0.0001"));
    CHECK(table_row("\\# Epochs", "20"));
    const SplitSpec s;
    CHECK(s.train_fraction == 0.7);
    CHECK(s.validation_fraction == 0.15);
    CHECK(mentions("$70\\%$"));
    CHECK(mentions("$15\\%$ each"));
  }

  TEST_CASE("heading synonyms") {
    const auto t = SynonymTable::defaults();
    for (const char* h : {"Background", "Related Work", "Historical Review"}) {
      CHECK(t.match(h) == SectionType::Background);
      CHECK(mentions(h));
    }
    for (const char* h : {"Experiments", "Empirical Evaluation", "Ablation Studies", "Evaluation"}) {
      CHECK(t.match(h) == SectionType::ExperimentsAndResults);
      CHECK(mentions(h));
    }
  }

  TEST_CASE("review field table") {
    const auto m = default_field_mapping();
    const std::vector<std::pair<std::string, TargetAttribute>> rows = {
        {"recommended decision", TargetAttribute::Score},
        {"Q6 Overall score", TargetAttribute::Score},
        {"Q8 Confidence in your score", TargetAttribute::Confidence},
        {"technical novelty and significance", TargetAttribute::Novelty},
        {"soundness", TargetAttribute::Correctness},
        {"clarity of presentation", TargetAttribute::Clarity},
        {"significance and importance", TargetAttribute::Impact},
        {"Q2(5) Reproducibility", TargetAttribute::Reproducibility},
        {"summary of the paper", TargetAttribute::PaperSummary},
        {"justification of rating", TargetAttribute::ReviewSummary},
        {"main review", TargetAttribute::MainReview},
        {"Top Reasons to Reject the Paper", TargetAttribute::StrengthWeakness},
        {"limitations and societal impact", TargetAttribute::Limitations},
        {"questions for authors", TargetAttribute::Questions},
        {"flag for ethics review", TargetAttribute::Ethics},
    };
    for (const auto& [field, target] : rows) {
      CAPTURE(field);
      CHECK(mentions(field));
      CHECK(m.find(field) == target);
    }
  }

  TEST_CASE("topic model") {
    CHECK(LdaConfig{}.topics == 13);
    CHECK(mentions("ICLR-2023 which is 13"));
    CHECK(PerTopicConfig{}.top_topics == 5);
    CHECK(mentions("five most frequent topics"));
  }
}
