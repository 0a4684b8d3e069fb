#include "sdq/corpus.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "sdq/binary_io.hpp"
#include "sdq/error.hpp"

namespace sdq {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 5> kSectionKeys = {
    "introduction", "background", "methodology", "experiments_and_results", "conclusion"};

constexpr std::array<std::string_view, 7> kAttributeKeys = {
    "score", "confidence", "novelty", "correctness", "clarity", "impact", "reproducibility"};

const std::set<std::string, std::less<>> kPaperKeys = {
    "id", "title", "abstract", "sections", "hypothesis", "reviews", "references", "venue",
    "publication_date", "decision", "citation_count", "influential_citation_count", "field_of_study"};

const std::set<std::string, std::less<>> kReviewKeys = {
    "text_review", "score", "confidence", "novelty", "correctness", "clarity", "impact", "reproducibility", "ethics"};

const std::set<std::string, std::less<>> kReferenceKeys = {
    "title", "abstract", "corpus_id", "arxiv_id", "intent", "is_influential"};

void check_keys(const json& j, const std::set<std::string, std::less<>>& allowed, std::string_view where) {
  if (!j.is_object()) throw ParseError(fmt::format("{}: expected a JSON object", where));
  for (const auto& [key, _] : j.items()) {
    if (!allowed.contains(key)) throw ParseError(fmt::format("{}: unknown key \"{}\"", where, key));
  }
}

std::string get_string(const json& j, std::string_view key, std::string_view where) {
  const auto it = j.find(key);
  if (it == j.end()) throw ParseError(fmt::format("{}: missing key \"{}\"", where, key));
  if (!it->is_string()) throw ParseError(fmt::format("{}.{}: expected string", where, key));
  return it->get<std::string>();
}

std::optional<std::string> opt_string(const json& j, std::string_view key, std::string_view where) {
  const auto it = j.find(key);
  if (it == j.end()) return std::nullopt;
  if (!it->is_string()) throw ParseError(fmt::format("{}.{}: expected string", where, key));
  return it->get<std::string>();
}

std::optional<double> opt_number(const json& j, std::string_view key, std::string_view where) {
  const auto it = j.find(key);
  if (it == j.end()) return std::nullopt;
  if (!it->is_number()) throw ParseError(fmt::format("{}.{}: expected number", where, key));
  return it->get<double>();
}

std::optional<std::uint64_t> opt_count(const json& j, std::string_view key, std::string_view where) {
  const auto it = j.find(key);
  if (it == j.end()) return std::nullopt;
  if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<std::int64_t>() >= 0)) {
    throw ParseError(fmt::format("{}.{}: expected nonnegative integer", where, key));
  }
  return it->get<std::uint64_t>();
}

json review_to_json(const ReviewRecord& r) {
  json j = json::object();
  j["text_review"] = r.text_review;
  for (ReviewAttribute a : kReviewAttributes) {
    if (const auto& v = r.get(a)) j[std::string(attribute_key(a))] = *v;
  }
  if (r.ethics) j["ethics"] = *r.ethics;
  return j;
}

ReviewRecord review_from_json(const json& j, const std::string& where) {
  check_keys(j, kReviewKeys, where);
  ReviewRecord r;
  r.text_review = get_string(j, "text_review", where);
  for (ReviewAttribute a : kReviewAttributes) r.get(a) = opt_number(j, attribute_key(a), where);
  r.ethics = opt_string(j, "ethics", where);
  return r;
}

json reference_to_json(const ReferenceRecord& r) {
  json j = json::object();
  j["title"] = r.title;
  if (r.abstract) j["abstract"] = *r.abstract;
  if (r.corpus_id) j["corpus_id"] = *r.corpus_id;
  if (r.arxiv_id) j["arxiv_id"] = *r.arxiv_id;
  if (r.intent) j["intent"] = *r.intent;
  j["is_influential"] = r.is_influential;
  return j;
}

ReferenceRecord reference_from_json(const json& j, const std::string& where) {
  check_keys(j, kReferenceKeys, where);
  ReferenceRecord r;
  r.title = get_string(j, "title", where);
  r.abstract = opt_string(j, "abstract", where);
  r.corpus_id = opt_string(j, "corpus_id", where);
  r.arxiv_id = opt_string(j, "arxiv_id", where);
  r.intent = opt_string(j, "intent", where);
  if (const auto it = j.find("is_influential"); it != j.end()) {
    if (!it->is_boolean()) throw ParseError(where + ".is_influential: expected boolean");
    r.is_influential = it->get<bool>();
  }
  return r;
}

void check_unit_interval(const std::optional<double>& v, const std::string& path, std::vector<Violation>& out) {
  if (!v) return;
  if (!std::isfinite(*v) || *v < 0.0 || *v > 1.0) {
    out.push_back({path, fmt::format("value {} outside [0, 1]", *v)});
  }
}

}  // namespace

std::string_view section_key(SectionType type) { return kSectionKeys[static_cast<std::size_t>(type)]; }

std::optional<SectionType> section_from_key(std::string_view key) {
  for (std::size_t i = 0; i < kSectionKeys.size(); ++i) {
    if (kSectionKeys[i] == key) return static_cast<SectionType>(i);
  }
  return std::nullopt;
}

std::string_view decision_key(Decision d) {
  switch (d) {
    case Decision::Accepted: return "accepted";
    case Decision::Rejected: return "rejected";
    case Decision::Unknown: return "unknown";
  }
  return "unknown";
}

std::optional<Decision> decision_from_key(std::string_view key) {
  if (key == "accepted") return Decision::Accepted;
  if (key == "rejected") return Decision::Rejected;
  if (key == "unknown") return Decision::Unknown;
  return std::nullopt;
}

std::string_view attribute_key(ReviewAttribute a) { return kAttributeKeys[static_cast<std::size_t>(a)]; }

std::optional<ReviewAttribute> attribute_from_key(std::string_view key) {
  for (std::size_t i = 0; i < kAttributeKeys.size(); ++i) {
    if (kAttributeKeys[i] == key) return static_cast<ReviewAttribute>(i);
  }
  return std::nullopt;
}

std::string YearMonth::str() const { return fmt::format("{:04d}-{:02d}", year, month); }

std::optional<YearMonth> YearMonth::parse(std::string_view text) {
  if (text.size() != 7 || text[4] != '-') return std::nullopt;
  YearMonth ym;
  auto [p1, e1] = std::from_chars(text.data(), text.data() + 4, ym.year);
  auto [p2, e2] = std::from_chars(text.data() + 5, text.data() + 7, ym.month);
  if (e1 != std::errc{} || e2 != std::errc{} || p1 != text.data() + 4 || p2 != text.data() + 7) return std::nullopt;
  if (!ym.valid()) return std::nullopt;
  return ym;
}

int months_between(YearMonth from, YearMonth to) noexcept {
  return (to.year - from.year) * 12 + (to.month - from.month);
}

std::optional<double>& ReviewRecord::get(ReviewAttribute a) {
  switch (a) {
    case ReviewAttribute::Score: return score;
    case ReviewAttribute::Confidence: return confidence;
    case ReviewAttribute::Novelty: return novelty;
    case ReviewAttribute::Correctness: return correctness;
    case ReviewAttribute::Clarity: return clarity;
    case ReviewAttribute::Impact: return impact;
    case ReviewAttribute::Reproducibility: return reproducibility;
  }
  return score;
}

const std::optional<double>& ReviewRecord::get(ReviewAttribute a) const {
  return const_cast<ReviewRecord*>(this)->get(a);
}

bool ReviewRecord::has_numeric() const {
  for (ReviewAttribute a : kReviewAttributes) {
    if (get(a)) return true;
  }
  return false;
}

std::vector<Violation> validate_record(const PaperRecord& r) {
  std::vector<Violation> out;
  if (r.id.empty()) out.push_back({"id", "must be nonempty"});
  if (r.title.empty()) out.push_back({"title", "must be nonempty"});
  if (!r.publication_date.valid()) {
    out.push_back({"publication_date", fmt::format("invalid year/month {}-{}", r.publication_date.year,
                                                   r.publication_date.month)});
  }
  if (r.citation_count && r.decision == Decision::Rejected) {
    out.push_back({"citation_count", "citation counts are defined only for accepted or unknown-decision papers"});
  }
  if (r.hypothesis) {
    if (r.hypothesis->problem.empty()) out.push_back({"hypothesis.problem", "must be nonempty"});
    if (r.hypothesis->methodology.empty()) out.push_back({"hypothesis.methodology", "must be nonempty"});
  }
  for (std::size_t i = 0; i < r.reviews.size(); ++i) {
    const ReviewRecord& rev = r.reviews[i];
    for (ReviewAttribute a : kReviewAttributes) {
      check_unit_interval(rev.get(a), fmt::format("reviews[{}].{}", i, attribute_key(a)), out);
    }
    if (rev.text_review.empty() && !rev.has_numeric()) {
      out.push_back({fmt::format("reviews[{}].text_review", i), "empty text requires at least one numeric field"});
    }
  }
  for (std::size_t i = 0; i < r.references.size(); ++i) {
    if (r.references[i].title.empty()) out.push_back({fmt::format("references[{}].title", i), "must be nonempty"});
  }
  return out;
}

json to_json(const PaperRecord& r) {
  json j = json::object();
  j["id"] = r.id;
  j["title"] = r.title;
  j["abstract"] = r.abstract;
  json sections = json::object();
  for (const auto& [type, text] : r.sections) sections[std::string(section_key(type))] = text;
  j["sections"] = std::move(sections);
  if (r.hypothesis) j["hypothesis"] = json{{"problem", r.hypothesis->problem}, {"methodology", r.hypothesis->methodology}};
  json reviews = json::array();
  for (const auto& rev : r.reviews) reviews.push_back(review_to_json(rev));
  j["reviews"] = std::move(reviews);
  json refs = json::array();
  for (const auto& ref : r.references) refs.push_back(reference_to_json(ref));
  j["references"] = std::move(refs);
  j["venue"] = r.venue;
  j["publication_date"] = r.publication_date.str();
  if (r.decision) j["decision"] = std::string(decision_key(*r.decision));
  if (r.citation_count) j["citation_count"] = *r.citation_count;
  if (r.influential_citation_count) j["influential_citation_count"] = *r.influential_citation_count;
  if (r.field_of_study) j["field_of_study"] = *r.field_of_study;
  return j;
}

PaperRecord paper_from_json(const json& j) {
  check_keys(j, kPaperKeys, "record");
  PaperRecord r;
  r.id = get_string(j, "id", "record");
  const std::string where = "record " + (r.id.empty() ? std::string("<no id>") : r.id);
  r.title = get_string(j, "title", where);
  r.abstract = get_string(j, "abstract", where);
  if (const auto it = j.find("sections"); it != j.end()) {
    if (!it->is_object()) throw ParseError(where + ".sections: expected object");
    for (const auto& [key, text] : it->items()) {
      const auto type = section_from_key(key);
      if (!type) throw ParseError(fmt::format("{}.sections: unknown section type \"{}\"", where, key));
      if (!text.is_string()) throw ParseError(fmt::format("{}.sections.{}: expected string", where, key));
      r.sections[*type] = text.get<std::string>();
    }
  }
  if (const auto it = j.find("hypothesis"); it != j.end()) {
    check_keys(*it, {"problem", "methodology"}, where + ".hypothesis");
    r.hypothesis = Hypothesis{get_string(*it, "problem", where + ".hypothesis"),
                              get_string(*it, "methodology", where + ".hypothesis")};
  }
  if (const auto it = j.find("reviews"); it != j.end()) {
    if (!it->is_array()) throw ParseError(where + ".reviews: expected array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      r.reviews.push_back(review_from_json((*it)[i], fmt::format("{}.reviews[{}]", where, i)));
    }
  }
  if (const auto it = j.find("references"); it != j.end()) {
    if (!it->is_array()) throw ParseError(where + ".references: expected array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      r.references.push_back(reference_from_json((*it)[i], fmt::format("{}.references[{}]", where, i)));
    }
  }
  r.venue = get_string(j, "venue", where);
  const std::string date = get_string(j, "publication_date", where);
  const auto ym = YearMonth::parse(date);
  if (!ym) throw ParseError(fmt::format("{}.publication_date: \"{}\" is not YYYY-MM", where, date));
  r.publication_date = *ym;
  if (const auto d = opt_string(j, "decision", where)) {
    r.decision = decision_from_key(*d);
    if (!r.decision) throw ParseError(fmt::format("{}.decision: unknown value \"{}\"", where, *d));
  }
  r.citation_count = opt_count(j, "citation_count", where);
  r.influential_citation_count = opt_count(j, "influential_citation_count", where);
  if (const auto it = j.find("field_of_study"); it != j.end()) {
    if (!it->is_array()) throw ParseError(where + ".field_of_study: expected array of strings");
    std::vector<std::string> fields;
    for (const auto& f : *it) {
      if (!f.is_string()) throw ParseError(where + ".field_of_study: expected array of strings");
      fields.push_back(f.get<std::string>());
    }
    r.field_of_study = std::move(fields);
  }
  return r;
}

std::string canonical_line(const PaperRecord& record) { return to_json(record).dump(); }

Corpus::Corpus(std::vector<PaperRecord> records) : records_(std::move(records)) {
  index_.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto violations = validate_record(records_[i]);
    if (!violations.empty()) {
      std::string msg = fmt::format("record {} (\"{}\") is invalid:", i, records_[i].id);
      for (const auto& v : violations) msg += fmt::format(" {}: {};", v.path, v.message);
      throw ValidationError(msg);
    }
    if (!index_.emplace(records_[i].id, i).second) {
      throw ValidationError(fmt::format("duplicate id \"{}\" at record {}", records_[i].id, i));
    }
  }
}

const PaperRecord* Corpus::find(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &records_[it->second];
}

Corpus parse_corpus(std::string_view jsonl) {
  std::vector<PaperRecord> records;
  std::unordered_map<std::string, std::size_t> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    std::size_t end = jsonl.find('\n', pos);
    if (end == std::string_view::npos) end = jsonl.size();
    std::string_view line = jsonl.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) throw ParseError(fmt::format("line {}: empty line", line_no));
    PaperRecord rec;
    try {
      rec = paper_from_json(json::parse(line));
    } catch (const json::exception& e) {
      throw ParseError(fmt::format("line {}: malformed JSON: {}", line_no, e.what()));
    } catch (const ParseError& e) {
      throw ParseError(fmt::format("line {}: {}", line_no, e.what()));
    }
    const auto violations = validate_record(rec);
    if (!violations.empty()) {
      std::string msg = fmt::format("line {}: invalid record:", line_no);
      for (const auto& v : violations) msg += fmt::format(" {}: {};", v.path, v.message);
      throw ValidationError(msg);
    }
    if (const auto [it, inserted] = seen.emplace(rec.id, line_no); !inserted) {
      throw ValidationError(fmt::format("line {}: duplicate id \"{}\" (first seen on line {})", line_no, rec.id,
                                        it->second));
    }
    records.push_back(std::move(rec));
  }
  return Corpus(std::move(records));
}

Corpus load_corpus(const std::filesystem::path& path) { return parse_corpus(io::read_file(path)); }

std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const auto& r : corpus) {
    out += canonical_line(r);
    out += '\n';
  }
  return out;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  io::write_file_atomic(path, serialize_corpus(corpus));
}

}  // namespace sdq
