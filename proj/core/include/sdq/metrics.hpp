#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdq/corpus.hpp"
#include "sdq/scoremodel.hpp"

namespace sdq {

struct MetricReport {
  std::optional<double> pairwise_accuracy;
  std::optional<double> spearman;
  std::optional<double> pearson;
  std::optional<double> l1;
  std::size_t n_items = 0;
  std::size_t n_pairs = 0;  // non-tied pairs behind pairwise_accuracy
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

struct PairwiseAccuracy {
  double accuracy = 0.0;
  std::size_t n_pairs = 0;
};

inline constexpr std::size_t kDefaultMaxPairs = 100000;

/// Fraction of non-tied target pairs whose score order agrees with the
/// target order; equal scores count 0.5. Every unordered pair is visited
/// when there are at most `max_pairs` of them, otherwise `max_pairs` random
/// non-tied pairs are drawn. The pairs depend only on targets and seed.
PairwiseAccuracy pairwise_accuracy(std::span<const double> scores, std::span<const double> targets,
                                   std::uint64_t seed, std::size_t max_pairs = kDefaultMaxPairs);

// Average ranks (1-based); tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> xs);

// Throw ValidationError on length mismatch, n < 2 or zero variance.
double pearson(std::span<const double> xs, std::span<const double> ys);
double spearman(std::span<const double> xs, std::span<const double> ys);

double mean_absolute_error(std::span<const double> predictions, std::span<const double> targets);

// Scores the model on a labeled set. Correlations that are undefined (for
// instance a constant model) are left absent.
MetricReport evaluate(const ScoreModel& model, std::span<const EmbeddedExample> test_set, std::uint64_t seed,
                      std::size_t max_pairs = kDefaultMaxPairs);
MetricReport evaluate_scores(std::span<const double> scores, std::span<const double> targets, std::uint64_t seed,
                             std::size_t max_pairs = kDefaultMaxPairs);

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for one value
  std::size_t n = 0;
};
MeanStd mean_std(std::span<const double> values);
// "0.665 (0.010)"
std::string format_mean_std(const MeanStd& m, int precision = 3);

// ---------------------------------------------------------------------------
// Analyses over a corpus

struct Correlation {
  double rho = 0.0;
  std::size_t n = 0;
};

/// Leave-one-review-out agreement: for every paper with at least three
/// reviews carrying `attribute`, one random review is held out and compared
/// against the mean of the rest. Pearson over papers.
Correlation human_consistency(const Corpus& corpus, ReviewAttribute attribute, std::uint64_t seed);

struct DimensionMatrix {
  // Indexed by kReviewAttributes order. Cells without two co-present
  // observations (or with zero variance) are absent.
  std::array<std::array<std::optional<double>, 7>, 7> rho{};
  std::array<std::array<std::size_t, 7>, 7> n{};

  nlohmann::json to_json() const;
  std::string to_csv() const;
  std::string to_svg() const;
};

DimensionMatrix review_dimension_correlations(const Corpus& corpus);

struct CorpusFilter {
  std::optional<std::string> venue;  // case-insensitive match
  std::optional<int> year;
  std::optional<int> before_year;  // publication year < before_year
  std::optional<std::string> field_of_study;
};

bool matches(const CorpusFilter& filter, const PaperRecord& record);

/// Accepted papers with at least one citation: Pearson between the citation
/// target at `snapshot` and the mean overall review score.
Correlation citation_review_correlation(const Corpus& corpus, const CorpusFilter& filter, YearMonth snapshot);

// ---------------------------------------------------------------------------
// Tournament ranking

struct RankItem {
  std::string id;
  double score = 0.0;
};

// True when item `a` beats item `b`.
using Comparator = std::function<bool(std::size_t a, std::size_t b)>;

// Higher score wins; equal scores go to the smaller id.
Comparator scalar_comparator(std::span<const RankItem> items);

struct Match {
  std::size_t round = 0;  // 1-based; 0 for round robin
  std::size_t a = 0;
  std::size_t b = 0;
  std::size_t winner = 0;
};

struct Ranking {
  std::vector<std::size_t> order;  // item indices, best first
  std::vector<std::size_t> wins;   // per item
  std::vector<Match> matches;
  std::vector<std::size_t> byes;   // per item

  std::size_t comparisons() const noexcept { return matches.size(); }
};

// Every unordered pair once. Ordered by wins, then total score, then id.
Ranking round_robin_rank(std::span<const RankItem> items, const Comparator& beats);

/// Swiss system. Round 1 pairs items in id order; later rounds pair adjacent
/// standings (wins, then Buchholz: the summed wins of past opponents, then
/// id), skipping rematches where possible. With an odd count the lowest
/// standing item without a bye sits out and is credited a win.
Ranking swiss_rank(std::span<const RankItem> items, const Comparator& beats, std::size_t rounds);

nlohmann::json ranking_to_json(std::span<const RankItem> items, const Ranking& ranking);
std::string ranking_to_text(std::span<const RankItem> items, const Ranking& ranking);

// Aligned-column plain-text table; the first row is the header.
std::string format_table(const std::vector<std::vector<std::string>>& rows);

}  // namespace sdq
