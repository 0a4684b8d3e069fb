#include "sdq/harmonize.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "sdq/binary_io.hpp"
#include "sdq/error.hpp"

namespace sdq {

namespace {

constexpr std::array<std::string_view, 14> kTargetKeys = {
    "score",        "confidence",     "novelty",     "correctness",       "clarity",
    "impact",       "reproducibility", "paper_summary", "review_summary", "main_review",
    "strength_weakness", "limitations", "questions", "ethics"};

struct TableRow {
  TargetAttribute target;
  std::vector<std::string_view> fields;
};

// Row order matters: when the published table lists one raw field under two
// attributes, the earlier row keeps it.
const std::vector<TableRow>& published_table() {
  static const std::vector<TableRow> rows = {
      {TargetAttribute::Score,
       {"overall rating", "rating", "evaluation", "Q6 Overall score", "Overall score", "recommended decision",
        "Overall Score", "overall evaluation", "review rating", "results", "score", "preliminary rating",
        "recommendation", "workshop rating", "custom rating", "overall evaluation"}},
      {TargetAttribute::Confidence,
       {"experience assessment", "Reviewer expertise", "confidence", "review assessment: thoroughness in paper reading",
        "reviewer's confidence", "reviewer expertise", "Confidence", "Q8 Confidence in your score",
        "review confidence", "workshop confidence"}},
      {TargetAttribute::Novelty,
       {"technical novelty and significance", "originality", "empirical novelty and significance", "novelty",
        "Q2(1) Originality/Novelty"}},
      {TargetAttribute::Correctness,
       {"correctness", "soundness", "review assessment: checking correctness of experiments",
        "Q2(3) Correctness/Technical quality", "review assessment: checking correctness of derivations and theory",
        "technical rigor", "Q2(4) Quality of experiments (Optional)", "technical quality and correctness rating",
        "scholarship", "technical quality", "litreview"}},
      {TargetAttribute::Clarity,
       {"presentation", "clarity", "clarity of presentation", "Q2(6) Clarity of writing", "clarity rating"}},
      {TargetAttribute::Impact,
       {"importance", "contribution", "relevance", "impact", "significance", "Q2(2) Significance/Impact",
        "potential impact on the field of AutoML rating", "significance and importance"}},
      {TargetAttribute::Reproducibility,
       {"Q2(5) Reproducibility", "reproducibility", "usability and ease of reproducibility rating", "accessibility"}},
      {TargetAttribute::PaperSummary,
       {"summary of the paper", "summary of paper", "problem statement", "summary", "Q1 Summary and contributions",
        "summary of contributions"}},
      {TargetAttribute::ReviewSummary,
       {"summary of recommendation", "overall recommendation", "summary of the review", "reviewer confidence",
        "Summary", "justification of rating", "Justification for rating", "Q7 Justification for your score",
        "review summary", "overall reproducibility review"}},
      {TargetAttribute::MainReview,
       {"comment", "intersection comment", "detailed comments", "rigor comment", "clarity comment", "main review",
        "Q5 Detailed comments to the authors", "potential impact on the field of AutoML", "importance comment",
        "technical quality and correctness", "review", "clarity", "quality", "novelty and reproducibility", "issues",
        "Q2 Assessment of the paper", "overall review", "usability and ease of reproducibility", "review text",
        "grounds for rejection", "Main review", "workshop review"}},
      {TargetAttribute::StrengthWeakness,
       {"strengths weaknesses", "strengths and weaknesses", "weaknesses", "Q3 Main strengths", "strengths",
        "strength and weaknesses", "Q4 Main weakness", "Review (Strengths/Weaknesses)",
        "Top Reasons to Accept the Paper", "Top Reasons to Reject the Paper", "reason for not giving higher score",
        "reason for not giving lower score", "contributions of the paper", "strengths of the paper",
        "weaknesses of the paper", "reasons to accept", "reasons to reject"}},
      {TargetAttribute::Limitations,
       {"limitations", "limitations and societal impact", "quality of the limitations section"}},
      {TargetAttribute::Questions,
       {"questions for rebuttal", "questions to address in the rebuttal", "questions",
        "Detailed Feedback and Questions for Authors", "questions for authors"}},
      {TargetAttribute::Ethics,
       {"ethics flag", "Q10 Ethical concerns (Optional)", "ethics and accessibility rating", "ethics review area",
        "flag for ethics review", "details of ethics concerns", "Ethical concerns", "ethics details (optional)",
        "needs ethics review", "ethical concerns", "ethical considerations"}},
  };
  return rows;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

FieldMapping mapping_from_json(const nlohmann::json& j, FieldMapping base, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + ".fields: expected object");
  for (const auto& [field, target] : j.items()) {
    if (!target.is_string()) throw ParseError(fmt::format("{}.fields.{}: expected string", where, field));
    const auto t = target_from_key(target.get<std::string>());
    if (!t) throw ParseError(fmt::format("{}.fields.{}: unknown target \"{}\"", where, field, target.get<std::string>()));
    base.add(field, *t);
  }
  return base;
}

ScaleMap scales_from_json(const nlohmann::json& j, const std::string& where) {
  ScaleMap scales;
  if (!j.is_object()) throw ParseError(where + ".scales: expected object");
  for (const auto& [attr, spec] : j.items()) {
    const auto a = attribute_from_key(attr);
    if (!a) throw ParseError(fmt::format("{}.scales: unknown attribute \"{}\"", where, attr));
    if (!spec.is_object() || !spec.contains("min") || !spec.contains("max") || !spec["min"].is_number() ||
        !spec["max"].is_number()) {
      throw ParseError(fmt::format("{}.scales.{}: expected {{\"min\": number, \"max\": number}}", where, attr));
    }
    ScaleSpec s{spec["min"].get<double>(), spec["max"].get<double>()};
    if (!(s.max_value > s.min_value)) {
      throw ValidationError(fmt::format("{}.scales.{}: max must exceed min", where, attr));
    }
    scales[*a] = s;
  }
  return scales;
}

VenueConfig venue_from_json(const nlohmann::json& j, const std::optional<VenueConfig>& fallback, const std::string& where) {
  VenueConfig v;
  FieldMapping base;
  if (j.value("use_builtin_fields", false)) base = default_field_mapping();
  if (j.value("inherit_default", false)) {
    if (!fallback) throw ValidationError(where + ": inherit_default set but no default block");
    base = fallback->mapping;
    v.scales = fallback->scales;
  }
  if (j.contains("fields")) {
    v.mapping = mapping_from_json(j["fields"], std::move(base), where);
  } else {
    v.mapping = std::move(base);
  }
  if (j.contains("scales")) {
    for (auto& [a, s] : scales_from_json(j["scales"], where)) v.scales[a] = s;
  }
  return v;
}

}  // namespace

std::string_view target_key(TargetAttribute t) { return kTargetKeys[static_cast<std::size_t>(t)]; }

std::optional<TargetAttribute> target_from_key(std::string_view key) {
  for (std::size_t i = 0; i < kTargetKeys.size(); ++i) {
    if (kTargetKeys[i] == key) return static_cast<TargetAttribute>(i);
  }
  return std::nullopt;
}

std::optional<ReviewAttribute> numeric_attribute(TargetAttribute t) {
  const auto i = static_cast<std::size_t>(t);
  if (i < kReviewAttributes.size()) return kReviewAttributes[i];
  return std::nullopt;
}

std::string normalize_field_name(std::string_view name) {
  std::string out;
  bool pending_space = false;
  for (unsigned char c : trim(name)) {
    if (std::isspace(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(std::tolower(c));
  }
  return out;
}

void FieldMapping::add(std::string_view field, TargetAttribute target) {
  const std::string key = normalize_field_name(field);
  if (const auto existing = find(key)) {
    if (*existing == target) return;
    throw ValidationError(fmt::format("field \"{}\" already maps to {}; cannot also map to {}", key,
                                      target_key(*existing), target_key(target)));
  }
  entries_.push_back({key, target});
}

bool FieldMapping::add_if_absent(std::string_view field, TargetAttribute target) {
  const std::string key = normalize_field_name(field);
  if (const auto existing = find(key)) return *existing == target;
  entries_.push_back({key, target});
  return true;
}

std::optional<TargetAttribute> FieldMapping::find(std::string_view field) const {
  const std::string key = normalize_field_name(field);
  for (const auto& e : entries_) {
    if (e.field == key) return e.target;
  }
  return std::nullopt;
}

FieldMapping default_field_mapping() {
  FieldMapping m;
  for (const auto& row : published_table()) {
    for (auto field : row.fields) m.add_if_absent(field, row.target);
  }
  return m;
}

const VenueConfig& HarmonizationConfig::for_venue(std::string_view venue) const {
  if (const auto it = venues.find(std::string(venue)); it != venues.end()) return it->second;
  if (fallback) return *fallback;
  throw ValidationError(fmt::format("no harmonization mapping configured for venue \"{}\"", venue));
}

HarmonizationConfig HarmonizationConfig::from_json(const nlohmann::json& j) {
  HarmonizationConfig cfg;
  if (!j.is_object()) throw ParseError("harmonization config: expected object");
  if (j.contains("default")) cfg.fallback = venue_from_json(j["default"], std::nullopt, "default");
  if (j.contains("venues")) {
    if (!j["venues"].is_object()) throw ParseError("harmonization config: venues must be an object");
    for (const auto& [name, v] : j["venues"].items()) {
      cfg.venues.emplace(name, venue_from_json(v, cfg.fallback, "venues." + name));
    }
  }
  return cfg;
}

HarmonizationConfig HarmonizationConfig::load(const std::filesystem::path& path) {
  try {
    return from_json(nlohmann::json::parse(io::read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

double parse_leading_number(std::string_view field, std::string_view value) {
  std::string_view s = trim(value);
  if (const auto colon = s.find(':'); colon != std::string_view::npos) s = trim(s.substr(0, colon));
  // from_chars rejects a leading '+'
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || s.empty() || !std::isfinite(v)) {
    throw ParseError(fmt::format("field \"{}\": cannot parse a number from \"{}\"", field, value));
  }
  // "8 accept" without a colon: accept the leading number when followed by space.
  if (ptr != s.data() + s.size() && !std::isspace(static_cast<unsigned char>(*ptr))) {
    throw ParseError(fmt::format("field \"{}\": cannot parse a number from \"{}\"", field, value));
  }
  return v;
}

HarmonizedReview harmonize_review(const std::map<std::string, std::string>& raw, const FieldMapping& mapping,
                                  const ScaleMap& scales) {
  HarmonizedReview out;
  std::map<std::string, std::pair<std::string, std::string_view>> by_norm;  // norm -> (raw key, value)
  for (const auto& [key, value] : raw) {
    const std::string norm = normalize_field_name(key);
    if (!mapping.find(norm)) {
      out.unmapped_fields.push_back(key);
      continue;
    }
    by_norm.emplace(norm, std::pair<std::string, std::string_view>{key, value});
  }

  std::vector<std::string> text_blocks;
  std::vector<std::string> ethics_blocks;
  for (const auto& entry : mapping.entries()) {
    const auto it = by_norm.find(entry.field);
    if (it == by_norm.end()) continue;
    const auto& [raw_key, value] = it->second;
    if (const auto attr = numeric_attribute(entry.target)) {
      if (trim(value).empty()) continue;
      auto& slot = out.review.get(*attr);
      if (slot) continue;  // first mapped field for an attribute wins
      const double v = parse_leading_number(raw_key, value);
      const auto scale = scales.find(*attr);
      if (scale == scales.end()) {
        throw ValidationError(fmt::format("field \"{}\": no scale configured for attribute {}", raw_key,
                                          attribute_key(*attr)));
      }
      const double norm = scale->second.normalize(v);
      if (norm < -0.01 || norm > 1.01) {
        throw ValidationError(fmt::format("field \"{}\": value {} normalizes to {} outside [{}, {}]; wrong scale?",
                                          raw_key, v, norm, scale->second.min_value, scale->second.max_value));
      }
      slot = std::clamp(norm, 0.0, 1.0);
    } else {
      const auto text = trim(value);
      if (text.empty()) continue;
      (entry.target == TargetAttribute::Ethics ? ethics_blocks : text_blocks).emplace_back(text);
    }
  }
  for (std::size_t i = 0; i < text_blocks.size(); ++i) {
    if (i) out.review.text_review += "\n\n";
    out.review.text_review += text_blocks[i];
  }
  if (!ethics_blocks.empty()) {
    std::string ethics;
    for (std::size_t i = 0; i < ethics_blocks.size(); ++i) {
      if (i) ethics += "\n\n";
      ethics += ethics_blocks[i];
    }
    out.review.ethics = std::move(ethics);
  }
  return out;
}

double citation_target(std::uint64_t citation_count, std::uint32_t months) {
  if (months == 0) throw ValidationError("citation_target: months_elapsed must be >= 1");
  return std::log1p(static_cast<double>(citation_count) / static_cast<double>(months));
}

std::uint32_t months_elapsed(YearMonth published, YearMonth snapshot) {
  return static_cast<std::uint32_t>(std::max(1, months_between(published, snapshot)));
}

std::optional<double> mean_review_score(const PaperRecord& record, ReviewAttribute attribute) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : record.reviews) {
    if (const auto& v = r.get(attribute)) {
      sum += *v;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

void SplitSpec::validate() const {
  for (double f : {train_fraction, validation_fraction, test_fraction}) {
    if (!(f > 0.0 && f < 1.0)) throw ValidationError(fmt::format("split fraction {} not in (0, 1)", f));
  }
  if (std::abs(train_fraction + validation_fraction + test_fraction - 1.0) > 1e-9) {
    throw ValidationError("split fractions must sum to 1");
  }
}

std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitSpec& spec) {
  spec.validate();
  const std::array<double, 3> fractions = {spec.train_fraction, spec.validation_fraction, spec.test_fraction};
  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> remainders{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double exact = fractions[i] * static_cast<double>(n);
    sizes[i] = static_cast<std::size_t>(std::floor(exact));
    remainders[i] = exact - static_cast<double>(sizes[i]);
    assigned += sizes[i];
  }
  std::array<std::size_t, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
  for (std::size_t k = 0; assigned < n; k = (k + 1) % 3, ++assigned) ++sizes[order[k]];
  return sizes;
}

Split temporal_split(std::vector<std::pair<std::string, YearMonth>> items, const SplitSpec& spec) {
  if (items.empty()) throw ValidationError("temporal_split: empty corpus");
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second < b.second;
    return a.first < b.first;
  });
  const auto sizes = split_sizes(items.size(), spec);
  Split out;
  std::size_t i = 0;
  for (; i < sizes[0]; ++i) out.train.push_back(items[i].first);
  for (; i < sizes[0] + sizes[1]; ++i) out.validation.push_back(items[i].first);
  for (; i < items.size(); ++i) out.test.push_back(items[i].first);
  return out;
}

Split temporal_split(const Corpus& corpus, const SplitSpec& spec) {
  std::vector<std::pair<std::string, YearMonth>> items;
  items.reserve(corpus.size());
  for (const auto& r : corpus) items.emplace_back(r.id, r.publication_date);
  return temporal_split(std::move(items), spec);
}

}  // namespace sdq
