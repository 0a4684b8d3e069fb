#include <algorithm>
#include <cctype>
#include <cmath>

#include <fmt/format.h>

#include "sdq/harmonize.hpp"
#include "sdq/metrics.hpp"

namespace sdq {
namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

}  // namespace

Correlation human_consistency(const Corpus& corpus, ReviewAttribute attribute, std::uint64_t seed) {
  Rng rng(mix64(seed ^ 0x4c00));
  std::vector<double> held, rest;
  for (const auto& paper : corpus) {
    std::vector<double> scores;
    for (const auto& r : paper.reviews) {
      if (const auto& v = r.get(attribute)) scores.push_back(*v);
    }
    if (scores.size() < 3) continue;
    const std::size_t k = rng.below(scores.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (i != k) sum += scores[i];
    }
    held.push_back(scores[k]);
    rest.push_back(sum / static_cast<double>(scores.size() - 1));
  }
  if (held.size() < 2) {
    throw ValidationError(fmt::format("human_consistency: {} submission(s) with at least three '{}' reviews, need 2",
                                      held.size(), attribute_key(attribute)));
  }
  return {pearson(held, rest), held.size()};
}

DimensionMatrix review_dimension_correlations(const Corpus& corpus) {
  DimensionMatrix m;
  std::vector<const ReviewRecord*> reviews;
  for (const auto& paper : corpus) {
    for (const auto& r : paper.reviews) reviews.push_back(&r);
  }
  for (std::size_t a = 0; a < kReviewAttributes.size(); ++a) {
    for (std::size_t b = a; b < kReviewAttributes.size(); ++b) {
      std::vector<double> xs, ys;
      for (const auto* r : reviews) {
        const auto& x = r->get(kReviewAttributes[a]);
        const auto& y = r->get(kReviewAttributes[b]);
        if (x && y) {
          xs.push_back(*x);
          ys.push_back(*y);
        }
      }
      m.n[a][b] = m.n[b][a] = xs.size();
      if (xs.size() < 2) continue;
      if (a == b) {
        // Unit diagonal whenever the dimension varies at all.
        if (std::any_of(xs.begin(), xs.end(), [&](double v) { return v != xs[0]; })) m.rho[a][a] = 1.0;
        continue;
      }
      try {
        m.rho[a][b] = m.rho[b][a] = pearson(xs, ys);
      } catch (const ValidationError&) {
      }
    }
  }
  return m;
}

nlohmann::json DimensionMatrix::to_json() const {
  nlohmann::json dims = nlohmann::json::array();
  for (auto a : kReviewAttributes) dims.push_back(attribute_key(a));
  nlohmann::json rho_j = nlohmann::json::array();
  nlohmann::json n_j = nlohmann::json::array();
  for (std::size_t a = 0; a < 7; ++a) {
    nlohmann::json row = nlohmann::json::array();
    nlohmann::json nrow = nlohmann::json::array();
    for (std::size_t b = 0; b < 7; ++b) {
      row.push_back(rho[a][b] ? nlohmann::json(*rho[a][b]) : nlohmann::json(nullptr));
      nrow.push_back(n[a][b]);
    }
    rho_j.push_back(row);
    n_j.push_back(nrow);
  }
  return {{"dimensions", dims}, {"pearson", rho_j}, {"n", n_j}};
}

std::string DimensionMatrix::to_csv() const {
  std::string out = "dimension";
  for (auto a : kReviewAttributes) out += fmt::format(",{}", attribute_key(a));
  out += '\n';
  for (std::size_t a = 0; a < 7; ++a) {
    out += attribute_key(kReviewAttributes[a]);
    for (std::size_t b = 0; b < 7; ++b) out += rho[a][b] ? fmt::format(",{:.6f}", *rho[a][b]) : std::string(",");
    out += '\n';
  }
  return out;
}

std::string DimensionMatrix::to_svg() const {
  constexpr int cell = 60;
  constexpr int margin = 110;
  const int size = margin + 7 * cell + 10;
  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{0}\" font-family=\"sans-serif\" "
      "font-size=\"11\">\n",
      size);
  for (std::size_t i = 0; i < 7; ++i) {
    const auto name = attribute_key(kReviewAttributes[i]);
    out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n", margin - 6,
                       margin + static_cast<int>(i) * cell + cell / 2 + 4, name);
    out += fmt::format("<text x=\"{0}\" y=\"{1}\" text-anchor=\"start\" transform=\"rotate(-45 {0} {1})\">{2}</text>\n",
                       margin + static_cast<int>(i) * cell + cell / 2, margin - 6, name);
  }
  for (std::size_t a = 0; a < 7; ++a) {
    for (std::size_t b = 0; b < 7; ++b) {
      const int x = margin + static_cast<int>(b) * cell;
      const int y = margin + static_cast<int>(a) * cell;
      std::string fill = "#dddddd";
      std::string label = "n/a";
      if (rho[a][b]) {
        // Blue for negative, red for positive.
        const double v = std::clamp(*rho[a][b], -1.0, 1.0);
        const int fade = static_cast<int>(std::lround(255.0 * (1.0 - std::abs(v))));
        fill = v >= 0 ? fmt::format("#ff{:02x}{:02x}", fade, fade) : fmt::format("#{:02x}{:02x}ff", fade, fade);
        label = fmt::format("{:.2f}", v);
      }
      out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" stroke=\"#ffffff\"/>\n", x, y,
                         cell, cell, fill);
      out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", x + cell / 2, y + cell / 2 + 4,
                         label);
    }
  }
  out += "</svg>\n";
  return out;
}

bool matches(const CorpusFilter& filter, const PaperRecord& record) {
  if (filter.venue && !iequals(*filter.venue, record.venue)) return false;
  if (filter.year && record.publication_date.year != *filter.year) return false;
  if (filter.before_year && record.publication_date.year >= *filter.before_year) return false;
  if (filter.field_of_study) {
    if (!record.field_of_study) return false;
    const auto& fields = *record.field_of_study;
    if (std::none_of(fields.begin(), fields.end(), [&](const std::string& f) { return iequals(f, *filter.field_of_study); })) {
      return false;
    }
  }
  return true;
}

Correlation citation_review_correlation(const Corpus& corpus, const CorpusFilter& filter, YearMonth snapshot) {
  std::vector<double> citations, reviews;
  for (const auto& paper : corpus) {
    if (!matches(filter, paper)) continue;
    if (paper.decision != Decision::Accepted) continue;
    if (!paper.citation_count || *paper.citation_count < 1) continue;
    const auto score = mean_review_score(paper, ReviewAttribute::Score);
    if (!score) continue;
    citations.push_back(citation_target(*paper.citation_count, months_elapsed(paper.publication_date, snapshot)));
    reviews.push_back(*score);
  }
  if (citations.size() < 2) {
    throw ValidationError(fmt::format("citation_review_correlation: filter selects {} paper(s), need 2",
                                      citations.size()));
  }
  return {pearson(citations, reviews), citations.size()};
}

}  // namespace sdq
