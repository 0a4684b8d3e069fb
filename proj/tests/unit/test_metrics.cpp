#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "sdq/error.hpp"
#include "sdq/harmonize.hpp"
#include "sdq/metrics.hpp"
#include "sdq/rng.hpp"

using namespace sdq;

namespace {

PaperRecord paper(std::size_t i) {
  PaperRecord p;
  p.id = "p" + std::to_string(i);
  p.title = "Paper " + std::to_string(i);
  p.abstract = "abstract";
  p.venue = "ICLR";
  p.publication_date = {2020, 1 + static_cast<int>(i % 12)};
  p.decision = Decision::Accepted;
  return p;
}

ReviewRecord review(double score) {
  ReviewRecord r;
  r.text_review = "fine";
  r.score = score;
  return r;
}

std::vector<RankItem> items_with_scores(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<RankItem> items;
  for (std::size_t i = 0; i < n; ++i) items.push_back({"i" + std::to_string(100 + i), rng.uniform()});
  return items;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("pairwise accuracy") {
    std::vector<double> t(50);
    std::iota(t.begin(), t.end(), 0.0);
    CHECK(pairwise_accuracy(t, t, 1).accuracy == 1.0);
    CHECK(pairwise_accuracy(t, t, 1).n_pairs == 50 * 49 / 2);
    const std::vector<double> flat(50, 3.0);
    CHECK(pairwise_accuracy(flat, t, 1).accuracy == 0.5);
    std::vector<double> rev(t.rbegin(), t.rend());
    CHECK(pairwise_accuracy(rev, t, 1).accuracy == 0.0);

    // Sampled pairs once the full count exceeds the cap.
    const auto sampled = pairwise_accuracy(t, t, 4, 100);
    CHECK(sampled.n_pairs == 100);
    CHECK(sampled.accuracy == 1.0);

    // Tied targets are ignored.
    const std::vector<double> tt = {1, 1, 2};
    const std::vector<double> s = {5, 0, 1};
    CHECK(pairwise_accuracy(s, tt, 0).n_pairs == 2);
    CHECK(pairwise_accuracy(s, tt, 0).accuracy == 0.5);
  }

  TEST_CASE("correlations") {
    const std::vector<double> x = {1, 2, 3, 4, 5};
    const std::vector<double> r = {5, 4, 3, 2, 1};
    CHECK(spearman(x, r) == doctest::Approx(-1.0));
    const std::vector<double> a = {1, 2, 3}, b = {2, 4, 6};
    CHECK(pearson(a, b) == doctest::Approx(1.0));
    const std::vector<double> c = {1, 1, 1};
    CHECK_THROWS_AS(pearson(a, c), ValidationError);
    CHECK_THROWS_AS(pearson(std::vector<double>{1}, std::vector<double>{1}), ValidationError);
    CHECK_THROWS_AS(spearman(a, x), ValidationError);

    const std::vector<double> ties = {10, 20, 20, 30};
    const auto ranks = average_ranks(ties);
    CHECK(ranks == std::vector<double>{1, 2.5, 2.5, 4});
    // Monotone transforms keep Spearman.
    const std::vector<double> sq = {1, 8, 27, 64, 125};
    CHECK(spearman(x, sq) == doctest::Approx(1.0));
    CHECK(mean_absolute_error(a, b) == doctest::Approx(2.0));
  }

  TEST_CASE("evaluate_scores leaves undefined correlations absent") {
    const std::vector<double> t = {0.1, 0.5, 0.9, 0.3};
    const std::vector<double> flat(4, 1.0);
    const auto rep = evaluate_scores(flat, t, 0);
    CHECK(rep.pairwise_accuracy == 0.5);
    CHECK_FALSE(rep.spearman.has_value());
    CHECK_FALSE(rep.pearson.has_value());
    CHECK(rep.n_items == 4);
  }

  TEST_CASE("mean and standard deviation") {
    const std::vector<double> v = {0.655, 0.665, 0.675};
    const auto m = mean_std(v);
    CHECK(m.mean == doctest::Approx(0.665));
    CHECK(m.stddev == doctest::Approx(0.01));
    CHECK(format_mean_std(m) == "0.665 (0.010)");
    CHECK(mean_std(std::vector<double>{2.0}).stddev == 0.0);
  }

  TEST_CASE("human consistency") {
    std::vector<PaperRecord> ps;
    Rng rng(3);
    for (std::size_t i = 0; i < 40; ++i) {
      auto p = paper(i);
      const double s = std::round(rng.uniform() * 8) / 8;
      for (int k = 0; k < 3 + static_cast<int>(i % 3); ++k) p.reviews.push_back(review(s));
      ps.push_back(p);
    }
    // A paper with two reviews does not qualify.
    auto two = paper(99);
    two.reviews = {review(0.1), review(0.9)};
    ps.push_back(two);
    const Corpus corpus(ps);
    const auto c = human_consistency(corpus, ReviewAttribute::Score, 7);
    CHECK(c.rho == doctest::Approx(1.0));
    CHECK(c.n == 40);
  }

  TEST_CASE("review dimension matrix") {
    Rng rng(5);
    std::vector<PaperRecord> ps;
    for (std::size_t i = 0; i < 2000; ++i) {
      auto p = paper(i);
      for (int k = 0; k < 5; ++k) {
        auto r = review(rng.uniform());
        r.impact = r.score;
        r.clarity = rng.uniform();
        p.reviews.push_back(r);
      }
      ps.push_back(p);
    }
    const auto m = review_dimension_correlations(Corpus(ps));
    const auto idx = [](ReviewAttribute a) {
      return static_cast<std::size_t>(std::find(kReviewAttributes.begin(), kReviewAttributes.end(), a) -
                                      kReviewAttributes.begin());
    };
    const auto s = idx(ReviewAttribute::Score), im = idx(ReviewAttribute::Impact), cl = idx(ReviewAttribute::Clarity);
    CHECK(*m.rho[s][s] == doctest::Approx(1.0));
    CHECK(*m.rho[cl][cl] == doctest::Approx(1.0));
    CHECK(*m.rho[s][im] == doctest::Approx(1.0));
    CHECK(std::abs(*m.rho[s][cl]) < 0.05);
    CHECK(m.n[s][cl] == 10000);
    CHECK_FALSE(m.rho[s][idx(ReviewAttribute::Novelty)].has_value());
    CHECK(m.to_csv().find("score") != std::string::npos);
    CHECK(m.to_svg().rfind("<svg", 0) == 0);
  }

  TEST_CASE("citation and review agree when the score is the target") {
    const YearMonth snapshot{2023, 1};
    std::vector<PaperRecord> ps;
    for (std::size_t i = 0; i < 20; ++i) {
      auto p = paper(i);
      p.publication_date = {2020, 6};
      p.citation_count = 1 + i * 3;
      ps.push_back(p);
    }
    const double top = citation_target(*ps.back().citation_count, months_elapsed(ps.back().publication_date, snapshot));
    for (auto& p : ps) {
      const double t = citation_target(*p.citation_count, months_elapsed(p.publication_date, snapshot));
      p.reviews = {review(t / top)};
    }
    auto rejected = paper(50);
    rejected.decision = Decision::Rejected;
    rejected.reviews = {review(0.0)};
    ps.push_back(rejected);
    const auto c = citation_review_correlation(Corpus(ps), {}, snapshot);
    CHECK(c.rho == doctest::Approx(1.0));
    CHECK(c.n == 20);

    CorpusFilter f;
    f.venue = "neurips";
    CHECK_THROWS_AS(citation_review_correlation(Corpus(ps), f, snapshot), ValidationError);
    f.venue = "iclr";
    CHECK(matches(f, ps[0]));
  }

  TEST_CASE("scalar comparator ties go to the smaller id") {
    const std::vector<RankItem> items = {{"b", 1.0}, {"a", 1.0}, {"c", 2.0}};
    const auto beats = scalar_comparator(items);
    CHECK(beats(1, 0));
    CHECK_FALSE(beats(0, 1));
    CHECK(beats(2, 1));
  }

  TEST_CASE("round robin") {
    const std::vector<RankItem> one = {{"x", 0.3}};
    const auto r1 = round_robin_rank(one, scalar_comparator(one));
    CHECK(r1.comparisons() == 0);
    CHECK(r1.order == std::vector<std::size_t>{0});

    const auto items = items_with_scores(9, 2);
    const auto r = round_robin_rank(items, scalar_comparator(items));
    CHECK(r.comparisons() == 36);
    const auto best = static_cast<std::size_t>(
        std::max_element(items.begin(), items.end(), [](auto& a, auto& b) { return a.score < b.score; }) -
        items.begin());
    CHECK(r.order.front() == best);
    CHECK(r.wins[best] == 8);
    for (std::size_t i = 1; i < r.order.size(); ++i) CHECK(items[r.order[i - 1]].score > items[r.order[i]].score);
  }

  TEST_CASE("swiss") {
    const std::vector<RankItem> two = {{"a", 0.1}, {"b", 0.9}};
    const auto r2 = swiss_rank(two, scalar_comparator(two), 1);
    CHECK(r2.comparisons() == 1);
    CHECK(r2.order.front() == 1);

    const auto items = items_with_scores(16, 3);
    const auto r = swiss_rank(items, scalar_comparator(items), 4);
    CHECK(r.comparisons() == 32);
    const auto best = static_cast<std::size_t>(
        std::max_element(items.begin(), items.end(), [](auto& a, auto& b) { return a.score < b.score; }) -
        items.begin());
    CHECK(r.order.front() == best);
    CHECK(r.wins[best] == 4);
    // No rematches in four rounds of sixteen.
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const auto& m : r.matches) CHECK(seen.insert(std::minmax(m.a, m.b)).second);

    const auto odd = items_with_scores(5, 4);
    const auto ro = swiss_rank(odd, scalar_comparator(odd), 3);
    CHECK(ro.comparisons() == 6);
    CHECK(std::accumulate(ro.byes.begin(), ro.byes.end(), std::size_t{0}) == 3);
    CHECK(*std::max_element(ro.byes.begin(), ro.byes.end()) == 1);
    CHECK(ranking_to_text(odd, ro).find("comparisons") != std::string::npos);
  }

  TEST_CASE("format_table aligns columns") {
    const auto t = format_table({{"a", "bbb"}, {"cccc", "d"}});
    // header, rule, row
    std::vector<std::string> lines;
    for (std::size_t pos = 0, nl; (nl = t.find('\n', pos)) != std::string::npos; pos = nl + 1) {
      lines.push_back(t.substr(pos, nl - pos));
    }
    REQUIRE(lines.size() == 3);
    CHECK(lines[1].find_first_not_of('-') == std::string::npos);
    CHECK(lines[0].find("bbb") == lines[2].find('d'));
  }
}
