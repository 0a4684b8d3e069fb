#include <doctest.h>

#include <atomic>
#include <cmath>

#include <nlohmann/json.hpp>

#include "sdq/error.hpp"
#include "sdq/harmonize.hpp"
// after Eigen: <resolv.h> defines _res as a macro
#include "stub_server.hpp"

using namespace sdq;

namespace {

ScaleMap one_to_ten() { return {{ReviewAttribute::Score, {1, 10}}, {ReviewAttribute::Confidence, {1, 5}}}; }

PaperRecord with_scores(std::vector<std::optional<double>> scores) {
  PaperRecord r;
  r.id = "x";
  r.title = "t";
  for (auto s : scores) {
    ReviewRecord rev;
    rev.text_review = "r";
    rev.score = s;
    r.reviews.push_back(rev);
  }
  return r;
}

}  // namespace

TEST_SUITE("harmonize") {
  TEST_CASE("numeric fields normalize onto [0, 1]") {
    const auto mapping = default_field_mapping();
    auto h = harmonize_review({{"rating", "8: accept"}}, mapping, one_to_ten());
    CHECK(*h.review.score == doctest::Approx(7.0 / 9.0).epsilon(1e-12));
    h = harmonize_review({{"rating", "1"}}, mapping, one_to_ten());
    CHECK(*h.review.score == 0.0);
    h = harmonize_review({{"rating", "10"}}, mapping, one_to_ten());
    CHECK(*h.review.score == 1.0);
    h = harmonize_review({{"recommended decision", "4"}}, mapping, one_to_ten());
    CHECK(*h.review.score == doctest::Approx(3.0 / 9.0));
  }

  TEST_CASE("field names match after trimming and case folding") {
    const auto mapping = default_field_mapping();
    const auto h = harmonize_review({{"  Overall   RATING ", "5"}}, mapping, one_to_ten());
    CHECK(h.review.score.has_value());
    CHECK(h.unmapped_fields.empty());
  }

  TEST_CASE("unmapped fields are reported and text fields concatenate") {
    const auto mapping = default_field_mapping();
    const auto h = harmonize_review(
        {{"summary", "S."}, {"main review", "M."}, {"shoe size", "44"}, {"ethics flag", "no"}}, mapping, one_to_ten());
    REQUIRE(h.unmapped_fields.size() == 1);
    CHECK(h.unmapped_fields[0] == "shoe size");
    CHECK(h.review.text_review.find("S.") != std::string::npos);
    CHECK(h.review.text_review.find("M.") != std::string::npos);
    CHECK(h.review.ethics == std::optional<std::string>("no"));
  }

  TEST_CASE("bad values and missing scales are errors") {
    const auto mapping = default_field_mapping();
    CHECK_THROWS_AS(harmonize_review({{"rating", "strong accept"}}, mapping, one_to_ten()), ParseError);
    CHECK_THROWS_AS(harmonize_review({{"novelty", "3"}}, mapping, one_to_ten()), ValidationError);
    CHECK_THROWS_AS(harmonize_review({{"rating", "42"}}, mapping, one_to_ten()), ValidationError);
  }

  TEST_CASE("a field maps to at most one target") {
    FieldMapping m;
    m.add("Rating", TargetAttribute::Score);
    m.add("rating", TargetAttribute::Score);
    CHECK(m.size() == 1);
    CHECK_THROWS_AS(m.add("RATING", TargetAttribute::Confidence), ValidationError);
    CHECK_FALSE(m.add_if_absent("rating", TargetAttribute::Confidence));
  }

  TEST_CASE("config: venues, inheritance and fallback") {
    const auto j = nlohmann::json::parse(R"({
      "default": {"use_builtin_fields": true, "scales": {"score": {"min": 1, "max": 10}}},
      "venues": {"V": {"fields": {"verdict": "score"}, "scales": {"score": {"min": 0, "max": 4}}},
                 "W": {"inherit_default": true, "scales": {"score": {"min": 1, "max": 5}}}}})");
    const auto cfg = HarmonizationConfig::from_json(j);
    const auto& v = cfg.for_venue("V");
    CHECK(v.mapping.find("verdict") == TargetAttribute::Score);
    CHECK_FALSE(v.mapping.find("rating"));
    CHECK(cfg.for_venue("W").mapping.find("rating") == TargetAttribute::Score);
    CHECK(cfg.for_venue("unknown").scales.at(ReviewAttribute::Score).max_value == 10);
    CHECK_THROWS(HarmonizationConfig::from_json(
        nlohmann::json::parse(R"({"venues": {"V": {"scales": {"score": {"min": 3, "max": 3}}}}})")));
  }

  TEST_CASE("citation_target") {
    CHECK(citation_target(0, 7) == 0.0);
    CHECK(citation_target(12, 12) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(citation_target(120, 12) == doctest::Approx(std::log(11.0)).epsilon(1e-15));
    CHECK_THROWS_AS(citation_target(1, 0), ValidationError);
    CHECK(months_elapsed({2023, 1}, {2024, 1}) == 12);
    CHECK(months_elapsed({2024, 1}, {2024, 1}) == 1);
  }

  TEST_CASE("mean_review_score") {
    CHECK(*mean_review_score(with_scores({0.2, 0.4}), ReviewAttribute::Score) == doctest::Approx(0.3));
    CHECK(*mean_review_score(with_scores({0.7}), ReviewAttribute::Score) == 0.7);
    CHECK_FALSE(mean_review_score(with_scores({0.7}), ReviewAttribute::Impact));
    CHECK(*mean_review_score(with_scores({0.5, std::nullopt}), ReviewAttribute::Score) == 0.5);
  }

  TEST_CASE("temporal_split") {
    std::vector<std::pair<std::string, YearMonth>> items;
    for (int i = 0; i < 10; ++i) items.emplace_back("p" + std::to_string(i), YearMonth{2010 + i, 1});
    auto s = temporal_split(items, {0.8, 0.1, 0.1});
    CHECK(s.train.size() == 8);
    CHECK(s.validation.size() == 1);
    REQUIRE(s.test.size() == 1);
    CHECK(s.test[0] == "p9");

    CHECK(split_sizes(3, {0.34, 0.33, 0.33}) == std::array<std::size_t, 3>{1, 1, 1});
    CHECK(split_sizes(100, {0.7, 0.15, 0.15}) == std::array<std::size_t, 3>{70, 15, 15});

    std::vector<std::pair<std::string, YearMonth>> same;
    for (const char* id : {"d", "a", "c", "b", "e"}) same.emplace_back(id, YearMonth{2020, 1});
    const auto a = temporal_split(same, {0.6, 0.2, 0.2});
    std::reverse(same.begin(), same.end());
    const auto b = temporal_split(same, {0.6, 0.2, 0.2});
    CHECK(a.train == b.train);
    CHECK(a.train == std::vector<std::string>{"a", "b", "c"});
    CHECK(a.test == std::vector<std::string>{"e"});
    CHECK_THROWS_AS(SplitSpec({0.5, 0.5, 0.5}).validate(), ValidationError);
  }
}

TEST_SUITE("citation-client") {
  using sdq::testing::StubServer;

  CitationClientConfig fast(const std::string& url) {
    CitationClientConfig c;
    c.base_url = url;
    c.min_interval = std::chrono::milliseconds(0);
    c.retry_backoff = std::chrono::milliseconds(0);
    c.timeout = std::chrono::seconds(5);
    return c;
  }

  // Known ids are "k<number>" with citations = number.
  void serve_batches(StubServer& s, std::atomic<int>& requests, std::string* api_key = nullptr) {
    s.server.Post("/graph/v1/paper/batch", [&requests, api_key](const httplib::Request& req, httplib::Response& res) {
      ++requests;
      if (api_key) *api_key = req.get_header_value("x-api-key");
      const auto ids = nlohmann::json::parse(req.body).at("ids");
      nlohmann::json out = nlohmann::json::array();
      for (const auto& id : ids) {
        const auto s = id.get<std::string>();
        if (s.rfind("k", 0) == 0) {
          const int n = std::stoi(s.substr(1));
          out.push_back({{"paperId", s}, {"citationCount", n}, {"influentialCitationCount", n / 10}});
        } else {
          out.push_back(nullptr);
        }
      }
      res.set_content(out.dump(), "application/json");
    });
  }

  TEST_CASE("250 ids in batches of 100 take exactly 3 requests") {
    StubServer s;
    std::atomic<int> requests{0};
    serve_batches(s, requests);
    s.start();
    std::vector<std::string> ids;
    for (int i = 0; i < 250; ++i) ids.push_back("k" + std::to_string(i));
    CitationClient client(fast(s.url()));
    const auto got = client.fetch(ids);
    CHECK(requests == 3);
    CHECK(client.requests_made() == 3);
    CHECK(got.size() == 250);
    CHECK(got.at("k42") == CitationCounts{42, 4});
  }

  TEST_CASE("empty list makes no requests; unknown ids stay absent") {
    StubServer s;
    std::atomic<int> requests{0};
    serve_batches(s, requests);
    s.start();
    CitationClient client(fast(s.url()));
    CHECK(client.fetch({}).empty());
    CHECK(requests == 0);
    const auto got = client.fetch({"k0", "missing"});
    CHECK(got.size() == 1);
    CHECK(got.at("k0") == CitationCounts{0, 0});
    CHECK_FALSE(got.count("missing"));
  }

  TEST_CASE("server errors are retried, client errors are not") {
    StubServer s;
    std::atomic<int> requests{0};
    s.server.Post("/graph/v1/paper/batch", [&](const httplib::Request&, httplib::Response& res) {
      if (++requests < 3) {
        res.status = 503;
        return;
      }
      res.set_content(R"([{"citationCount": 5}])", "application/json");
    });
    s.start();
    CitationClient client(fast(s.url()));
    CHECK(client.fetch({"a"}).at("a").citations == 5);
    CHECK(requests == 3);

    StubServer bad;
    std::atomic<int> bad_requests{0};
    bad.server.Post("/graph/v1/paper/batch", [&](const httplib::Request&, httplib::Response& res) {
      ++bad_requests;
      res.status = 400;
    });
    bad.start();
    CitationClient bad_client(fast(bad.url()));
    CHECK_THROWS_AS(bad_client.fetch({"a"}), NetworkError);
    CHECK(bad_requests == 1);
  }

  TEST_CASE("api key header and malformed responses") {
    StubServer s;
    std::atomic<int> requests{0};
    std::string key;
    serve_batches(s, requests, &key);
    s.start();
    auto cfg = fast(s.url());
    cfg.api_key = "secret";
    CitationClient(cfg).fetch({"k1"});
    CHECK(key == "secret");

    StubServer broken;
    broken.server.Post("/graph/v1/paper/batch", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"not": "an array"})", "application/json");
    });
    broken.start();
    CHECK_THROWS_AS(CitationClient(fast(broken.url())).fetch({"a"}), ParseError);
  }

  TEST_CASE("unreachable host fails after retries") {
    auto cfg = fast("http://127.0.0.1:1");
    cfg.max_retries = 1;
    CitationClient client(cfg);
    CHECK_THROWS_AS(client.fetch({"a"}), NetworkError);
    CHECK(client.requests_made() == 2);
  }
}
