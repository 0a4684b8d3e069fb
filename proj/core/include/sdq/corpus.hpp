#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace sdq {

enum class SectionType { Introduction, Background, Methodology, ExperimentsAndResults, Conclusion };

inline constexpr std::array<SectionType, 5> kSectionTypes = {
    SectionType::Introduction, SectionType::Background, SectionType::Methodology,
    SectionType::ExperimentsAndResults, SectionType::Conclusion};

// snake_case keys used in the JSONL format ("experiments_and_results", ...)
std::string_view section_key(SectionType type);
std::optional<SectionType> section_from_key(std::string_view key);

enum class Decision { Accepted, Rejected, Unknown };

std::string_view decision_key(Decision d);
std::optional<Decision> decision_from_key(std::string_view key);

// Calendar year + month; serialized as "YYYY-MM".
struct YearMonth {
  int year = 1970;
  int month = 1;

  bool valid() const noexcept { return year >= 1 && year <= 9999 && month >= 1 && month <= 12; }
  std::string str() const;
  static std::optional<YearMonth> parse(std::string_view text);

  friend auto operator<=>(const YearMonth&, const YearMonth&) = default;
};

// Whole months from `from` to `to` (negative if `to` precedes `from`).
int months_between(YearMonth from, YearMonth to) noexcept;

struct Hypothesis {
  std::string problem;
  std::string methodology;

  friend bool operator==(const Hypothesis&, const Hypothesis&) = default;
};

// The seven numeric review dimensions, each normalized to [0, 1].
enum class ReviewAttribute { Score, Confidence, Novelty, Correctness, Clarity, Impact, Reproducibility };

inline constexpr std::array<ReviewAttribute, 7> kReviewAttributes = {
    ReviewAttribute::Score,       ReviewAttribute::Confidence, ReviewAttribute::Novelty,
    ReviewAttribute::Correctness, ReviewAttribute::Clarity,    ReviewAttribute::Impact,
    ReviewAttribute::Reproducibility};

std::string_view attribute_key(ReviewAttribute a);
std::optional<ReviewAttribute> attribute_from_key(std::string_view key);

struct ReviewRecord {
  std::string text_review;
  std::optional<double> score;
  std::optional<double> confidence;
  std::optional<double> novelty;
  std::optional<double> correctness;
  std::optional<double> clarity;
  std::optional<double> impact;
  std::optional<double> reproducibility;
  std::optional<std::string> ethics;

  std::optional<double>& get(ReviewAttribute a);
  const std::optional<double>& get(ReviewAttribute a) const;
  bool has_numeric() const;

  friend bool operator==(const ReviewRecord&, const ReviewRecord&) = default;
};

struct ReferenceRecord {
  std::string title;
  std::optional<std::string> abstract;
  std::optional<std::string> corpus_id;
  std::optional<std::string> arxiv_id;
  std::optional<std::string> intent;
  bool is_influential = false;

  friend bool operator==(const ReferenceRecord&, const ReferenceRecord&) = default;
};

struct PaperRecord {
  std::string id;
  std::string title;
  std::string abstract;
  std::map<SectionType, std::string> sections;
  std::optional<Hypothesis> hypothesis;
  std::vector<ReviewRecord> reviews;
  std::vector<ReferenceRecord> references;
  std::string venue;
  YearMonth publication_date;
  std::optional<Decision> decision;
  std::optional<std::uint64_t> citation_count;
  std::optional<std::uint64_t> influential_citation_count;
  std::optional<std::vector<std::string>> field_of_study;

  friend bool operator==(const PaperRecord&, const PaperRecord&) = default;
};

struct Violation {
  std::string path;     // e.g. "reviews[0].score"
  std::string message;

  friend bool operator==(const Violation&, const Violation&) = default;
};

// Every violated record-level invariant. Uniqueness of ids is a corpus-level
// property and is checked by Corpus itself.
std::vector<Violation> validate_record(const PaperRecord& record);

nlohmann::json to_json(const PaperRecord& record);
PaperRecord paper_from_json(const nlohmann::json& j);  // throws ParseError

// Canonical single-line form: sorted keys, absent optionals omitted.
std::string canonical_line(const PaperRecord& record);

/// Immutable, validated collection of papers in file order.
class Corpus {
 public:
  Corpus() = default;
  // Throws ValidationError on duplicate ids or invariant violations.
  explicit Corpus(std::vector<PaperRecord> records);

  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  const std::vector<PaperRecord>& records() const noexcept { return records_; }
  const PaperRecord& operator[](std::size_t i) const { return records_[i]; }
  const PaperRecord* find(std::string_view id) const;

  auto begin() const noexcept { return records_.begin(); }
  auto end() const noexcept { return records_.end(); }

  friend bool operator==(const Corpus& a, const Corpus& b) { return a.records_ == b.records_; }

 private:
  std::vector<PaperRecord> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

Corpus load_corpus(const std::filesystem::path& path);
Corpus parse_corpus(std::string_view jsonl);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
std::string serialize_corpus(const Corpus& corpus);

}  // namespace sdq
