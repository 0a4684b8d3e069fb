#include <doctest.h>

#include <numeric>

#include "sdq/embed.hpp"
#include "sdq/error.hpp"
#include "sdq/sections.hpp"
#include "synthetic.hpp"

using namespace sdq;
using sdq::testing::TempDir;

namespace {

SectionClassifierConfig small_config() {
  SectionClassifierConfig c;
  c.layers = 1;
  c.heads = 2;
  c.ff_hidden = 32;
  c.dropout = 0.0;
  c.learning_rate = 1e-3;
  c.batch_size = 16;
  c.epochs = 15;
  c.seed = 2;
  return c;
}

}  // namespace

TEST_SUITE("sections") {
  TEST_CASE("heading normalization and matching") {
    CHECK(normalize_heading("  3.1   Related   Work: ") == "related work");
    CHECK(normalize_heading("IV. CONCLUSION") == "conclusion");
    CHECK(normalize_heading("§2 Method.") == "method");
    const auto t = SynonymTable::defaults();
    CHECK(t.match("Related Work") == SectionType::Background);
    CHECK(t.match("3. Evaluation") == SectionType::ExperimentsAndResults);
    CHECK(t.match("1 Introduction") == SectionType::Introduction);
    CHECK_FALSE(t.match("Acknowledgements").has_value());
    CHECK_FALSE(t.match("").has_value());
  }

  TEST_CASE("every synonym matches its own type") {
    const auto t = SynonymTable::defaults();
    std::size_t n = 0;
    for (const auto& [type, words] : t.synonyms()) {
      CHECK_FALSE(words.empty());
      for (const auto& w : words) {
        CHECK(t.match(w) == type);
        ++n;
      }
    }
    CHECK(t.synonyms().size() == 5);
    CHECK(n > 20);
  }

  TEST_CASE("synonym table validation") {
    auto j = SynonymTable::defaults().to_json();
    CHECK(SynonymTable::from_json(j).to_json() == j);
    auto missing = j;
    missing.erase("conclusion");
    CHECK_THROWS(SynonymTable::from_json(missing));
    auto dup = j;
    dup["conclusion"].push_back("Related Work");
    CHECK_THROWS_AS(SynonymTable::from_json(dup), ValidationError);
    auto empty = j;
    empty["background"] = nlohmann::json::array();
    CHECK_THROWS(SynonymTable::from_json(empty));
  }

  TEST_CASE("dataset building") {
    const auto papers = sdq::testing::separable_section_papers(6, 1);
    const auto t = SynonymTable::defaults();
    const auto a = build_section_dataset(papers, t);
    const auto b = build_section_dataset(papers, t);
    REQUIRE(a.examples.size() == b.examples.size());
    for (std::size_t i = 0; i < a.examples.size(); ++i) {
      CHECK(a.examples[i].sentences == b.examples[i].sentences);
      CHECK(a.examples[i].label == b.examples[i].label);
    }
    CHECK(a.matched == 30);
    CHECK(a.skipped >= 6);
    CHECK(a.skipped_headings.count("acknowledgements") == 1);
    CHECK(std::accumulate(a.per_label.begin(), a.per_label.end(), std::size_t{0}) == a.matched);
    for (auto c : a.per_label) CHECK(c == 6);
  }

  TEST_CASE("raw paper parsing") {
    const auto ps = parse_raw_papers(
        "{\"id\":\"a\",\"sections\":[{\"heading\":\"Intro\",\"text\":\"Hello there.\"}]}\n\n"
        "{\"id\":\"b\",\"sections\":[]}\n");
    REQUIRE(ps.size() == 2);
    CHECK(ps[0].sections[0].heading == "Intro");
    CHECK_THROWS(parse_raw_papers("{\"id\":1}\n"));
  }

  TEST_CASE("classifier memorizes a separable set") {
    DeterministicEmbedder e(3, 32);
    const auto ds = build_section_dataset(sdq::testing::separable_section_papers(30, 4), SynonymTable::defaults());
    const auto r = train_section_classifier(ds, e, small_config());
    CHECK(r.split_counts[0] + r.split_counts[1] + r.split_counts[2] == ds.examples.size());
    CHECK(r.test_accuracy >= 0.9);
    CHECK(r.history.size() == 15);

    const auto& ex = ds.examples.front();
    std::vector<EmbeddingVector> sent;
    for (const auto& s : ex.sentences) sent.push_back(embed_text(s, e));
    const auto p = r.classifier.probabilities(sent);
    CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0));
    CHECK(r.classifier.probabilities(sent) == p);

    std::string paragraph;
    for (const auto& s : ex.sentences) paragraph += s + " ";
    const auto pred = classify_section(paragraph, r.classifier, e);
    CHECK(pred.label == ex.label);
    CHECK_THROWS_AS(classify_section("  ", r.classifier, e), ValidationError);

    TempDir dir("sc");
    r.classifier.save(dir / "c.sdqc");
    const auto back = SectionClassifier::load(dir / "c.sdqc");
    CHECK(back.probabilities(sent) == p);
    CHECK(back.provider_id == r.classifier.provider_id);
  }

  TEST_CASE("classifier input errors") {
    DeterministicEmbedder e(3, 32);
    SectionDataset one_label;
    one_label.examples.push_back({{"Only one."}, SectionType::Conclusion, "x"});
    CHECK_THROWS_AS(train_section_classifier(one_label, e, small_config()), ValidationError);
    auto bad = small_config();
    bad.heads = 5;  // 32 is not divisible by 5
    const auto ds = build_section_dataset(sdq::testing::separable_section_papers(4, 4), SynonymTable::defaults());
    CHECK_THROWS(train_section_classifier(ds, e, bad));
    CHECK(SectionClassifierConfig::from_json(small_config().to_json(), {}).to_json() == small_config().to_json());
  }
}
