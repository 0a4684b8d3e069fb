#include "sdq/sections.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

#include <fmt/format.h>

#include "sdq/binary_io.hpp"

namespace sdq {
namespace {

bool is_roman(std::string_view s) {
  static const std::regex re("^(x{0,3})(ix|iv|v?i{0,3})$");
  return !s.empty() && std::regex_match(s.begin(), s.end(), re);
}

}  // namespace

std::string normalize_heading(std::string_view heading) {
  std::string s = normalize_whitespace(heading);
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));

  // Leading section marks and numbering, possibly several ("§ 3.1").
  for (bool changed = true; changed && !s.empty();) {
    changed = false;
    if (s.rfind("\xc2\xa7", 0) == 0) {  // UTF-8 section sign
      s.erase(0, 2);
      changed = true;
    } else if (std::isdigit(static_cast<unsigned char>(s[0]))) {
      std::size_t i = 0;
      while (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.')) ++i;
      s.erase(0, i);
      changed = true;
    } else {
      const std::size_t end = s.find_first_of(" .");
      if (end != std::string::npos && end + 1 < s.size() && is_roman(std::string_view(s).substr(0, end))) {
        s.erase(0, end + 1);
        changed = true;
      }
    }
    const std::size_t first = s.find_first_not_of(" .)");
    s.erase(0, first == std::string::npos ? s.size() : first);
  }
  while (!s.empty() && (s.back() == ':' || s.back() == '.' || s.back() == ' ')) s.pop_back();
  return s;
}

SynonymTable::SynonymTable(std::map<SectionType, std::vector<std::string>> synonyms) {
  for (auto type : kSectionTypes) {
    auto it = synonyms.find(type);
    if (it == synonyms.end() || it->second.empty()) {
      throw ValidationError(fmt::format("synonym table: no synonyms for '{}'", section_key(type)));
    }
    std::vector<std::string> kept;
    for (const auto& syn : it->second) {
      const std::string key = normalize_heading(syn);
      if (key.empty()) throw ValidationError(fmt::format("synonym table: empty synonym under '{}'", section_key(type)));
      auto found = index_.find(key);
      if (found != index_.end()) {
        if (found->second != type) {
          throw ValidationError(fmt::format("synonym table: '{}' listed under both '{}' and '{}'", syn,
                                            section_key(found->second), section_key(type)));
        }
        continue;  // repeated within one type
      }
      index_.emplace(key, type);
      kept.push_back(syn);
    }
    synonyms_[type] = std::move(kept);
  }
}

SynonymTable SynonymTable::defaults() {
  return SynonymTable({
      {SectionType::Introduction, {"Introduction"}},
      {SectionType::Background, {"Background", "Related Work", "Historical Review"}},
      {SectionType::Methodology, {"Methodology", "Method", "Algorithm", "Properties"}},
      {SectionType::ExperimentsAndResults,
       {"Experiments", "Results", "Experiments and Results", "Experimental Design", "Empirical Evaluation",
        "Experiments and Analysis", "Ablation Studies", "Evaluation"}},
      {SectionType::Conclusion,
       {"Conclusion", "Conclusion & Discussion", "Discussion and Conclusions", "Conclusion and Outlook",
        "Further Work", "Discussions and Future Directions"}},
  });
}

SynonymTable SynonymTable::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("synonym table must be a JSON object");
  std::map<SectionType, std::vector<std::string>> m;
  for (const auto& [key, v] : j.items()) {
    const auto type = section_from_key(key);
    if (!type) throw ParseError(fmt::format("synonym table: unknown section type '{}'", key));
    try {
      m[*type] = v.get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception&) {
      throw ParseError(fmt::format("synonym table: '{}' must be a list of strings", key));
    }
  }
  return SynonymTable(std::move(m));
}

SynonymTable SynonymTable::load(const std::filesystem::path& path) {
  try {
    return from_json(nlohmann::json::parse(io::read_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

nlohmann::json SynonymTable::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [type, list] : synonyms_) j[std::string(section_key(type))] = list;
  return j;
}

std::optional<SectionType> SynonymTable::match(std::string_view heading) const {
  auto it = index_.find(normalize_heading(heading));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<RawPaper> parse_raw_papers(std::string_view jsonl) {
  std::vector<RawPaper> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    std::size_t end = jsonl.find('\n', pos);
    if (end == std::string_view::npos) end = jsonl.size();
    const std::string_view line = jsonl.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      RawPaper p;
      p.id = j.at("id").get<std::string>();
      for (const auto& s : j.at("sections")) {
        p.sections.push_back({s.at("heading").get<std::string>(), s.at("text").get<std::string>()});
      }
      out.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(fmt::format("raw papers line {}: {}", line_no, e.what()));
    }
  }
  return out;
}

std::vector<RawPaper> load_raw_papers(const std::filesystem::path& path) {
  try {
    return parse_raw_papers(io::read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

SectionDataset build_section_dataset(const std::vector<RawPaper>& papers, const SynonymTable& synonyms) {
  SectionDataset d;
  for (const auto& paper : papers) {
    for (const auto& section : paper.sections) {
      const auto label = synonyms.match(section.heading);
      if (!label) {
        ++d.skipped;
        ++d.skipped_headings[normalize_heading(section.heading)];
        continue;
      }
      auto sentences = segment_sentences(section.text);
      if (sentences.empty()) {
        ++d.skipped;
        ++d.skipped_headings[normalize_heading(section.heading)];
        continue;
      }
      ++d.matched;
      ++d.per_label[static_cast<std::size_t>(*label)];
      d.examples.push_back({std::move(sentences), *label, paper.id});
    }
  }
  return d;
}

}  // namespace sdq
