#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdq/corpus.hpp"

namespace sdq {

// Where a venue's raw review field lands in the unified review record. The
// first seven mirror ReviewAttribute; the rest are text blocks that are
// concatenated into text_review (Ethics goes to its own field).
enum class TargetAttribute {
  Score,
  Confidence,
  Novelty,
  Correctness,
  Clarity,
  Impact,
  Reproducibility,
  PaperSummary,
  ReviewSummary,
  MainReview,
  StrengthWeakness,
  Limitations,
  Questions,
  Ethics,
};

std::string_view target_key(TargetAttribute t);
std::optional<TargetAttribute> target_from_key(std::string_view key);
std::optional<ReviewAttribute> numeric_attribute(TargetAttribute t);

// Trim + case-fold + collapse internal whitespace.
std::string normalize_field_name(std::string_view name);

class FieldMapping {
 public:
  struct Entry {
    std::string field;  // normalized
    TargetAttribute target;
  };

  FieldMapping() = default;

  // Throws ValidationError if `field` already maps to a different target.
  // Re-adding the same (field, target) is a no-op.
  void add(std::string_view field, TargetAttribute target);
  // Like add() but silently keeps the existing mapping on conflict; returns
  // false when the entry was dropped.
  bool add_if_absent(std::string_view field, TargetAttribute target);

  std::optional<TargetAttribute> find(std::string_view field) const;
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::vector<Entry> entries_;
};

// Built-in table of the common OpenReview review field names.
FieldMapping default_field_mapping();

struct ScaleSpec {
  double min_value = 0.0;
  double max_value = 1.0;

  double normalize(double raw) const noexcept { return (raw - min_value) / (max_value - min_value); }
};

using ScaleMap = std::map<ReviewAttribute, ScaleSpec>;

struct VenueConfig {
  FieldMapping mapping;
  ScaleMap scales;
};

/// Mapping tables and scales for every configured venue, loaded from JSON:
///
///   { "default": { "fields": {...}, "scales": {...} },
///     "venues":  { "ICLR-2023": { "fields": {"recommendation": "score"},
///                                 "scales": {"score": {"min": 1, "max": 10}} } } }
///
/// A venue entry may set "inherit_default": true to start from the default
/// field table. The "default" block may set "use_builtin_fields": true to
/// start from default_field_mapping().
struct HarmonizationConfig {
  std::map<std::string, VenueConfig> venues;
  std::optional<VenueConfig> fallback;

  // Throws ValidationError when the venue is unknown and there is no fallback.
  const VenueConfig& for_venue(std::string_view venue) const;

  static HarmonizationConfig from_json(const nlohmann::json& j);
  static HarmonizationConfig load(const std::filesystem::path& path);
};

struct HarmonizedReview {
  ReviewRecord review;
  std::vector<std::string> unmapped_fields;  // raw keys, in raw-map order
};

// Leading integer/decimal of "8", "8: accept", " 3.5 : good". Throws
// ParseError naming `field` on failure.
double parse_leading_number(std::string_view field, std::string_view value);

HarmonizedReview harmonize_review(const std::map<std::string, std::string>& raw, const FieldMapping& mapping,
                                  const ScaleMap& scales);

// ln(1 + citations / months). Throws ValidationError for months == 0.
double citation_target(std::uint64_t citation_count, std::uint32_t months_elapsed);

// Whole months from publication to snapshot, at least 1.
std::uint32_t months_elapsed(YearMonth published, YearMonth snapshot);

std::optional<double> mean_review_score(const PaperRecord& record, ReviewAttribute attribute);

struct SplitSpec {
  double train_fraction = 0.7;
  double validation_fraction = 0.15;
  double test_fraction = 0.15;

  void validate() const;  // throws ValidationError
};

struct Split {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
};

// Sizes by largest remainder: floor(n * f) per part, leftovers to the parts
// with the largest fractional remainders (ties in train/val/test order).
std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitSpec& spec);

Split temporal_split(std::vector<std::pair<std::string, YearMonth>> items, const SplitSpec& spec);
Split temporal_split(const Corpus& corpus, const SplitSpec& spec);

// ---------------------------------------------------------------------------
// Citation-count enrichment against the Semantic Scholar batch endpoint.

struct CitationCounts {
  std::uint64_t citations = 0;
  std::uint64_t influential_citations = 0;

  friend bool operator==(const CitationCounts&, const CitationCounts&) = default;
};

struct CitationClientConfig {
  std::string base_url = "https://api.semanticscholar.org";
  std::string batch_path = "/graph/v1/paper/batch";
  std::size_t batch_size = 100;
  int max_retries = 3;
  std::chrono::milliseconds min_interval{1000};
  std::chrono::milliseconds retry_backoff{1000};
  std::chrono::seconds timeout{30};
  std::string api_key;  // sent as x-api-key when nonempty

  // Reads SDQ_API_KEY into api_key when it is set.
  static CitationClientConfig from_env(CitationClientConfig base);
  static CitationClientConfig from_env();
  static CitationClientConfig from_json(const nlohmann::json& j);
};

class CitationClient {
 public:
  explicit CitationClient(CitationClientConfig config);

  // Ids unknown upstream are absent from the result, never zero.
  std::map<std::string, CitationCounts> fetch(const std::vector<std::string>& ids);

  std::size_t requests_made() const noexcept { return requests_; }

 private:
  std::string post_with_retries(const std::string& body);

  CitationClientConfig config_;
  std::size_t requests_ = 0;
  std::chrono::steady_clock::time_point last_request_{};
};

}  // namespace sdq
