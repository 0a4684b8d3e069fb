#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "sdq/embed.hpp"

namespace sdq {

namespace {

// Words that end in a period without ending the sentence. Compared
// lowercased and without the trailing period.
const std::set<std::string, std::less<>>& abbreviations() {
  static const std::set<std::string, std::less<>> words = {
      "al",   "fig",  "figs", "eq",   "eqs",   "eqn",  "eqns", "e.g",  "i.e",  "vs",   "cf",   "sec",
      "secs", "tab",  "ref",  "refs", "dr",    "mr",   "mrs",  "ms",   "prof", "no",   "nos",  "vol",
      "pp",   "p",    "approx", "resp", "ch",  "def",  "thm",  "lem",  "prop", "cor",  "app",  "appx",
      "st",   "jr",   "inc",  "ltd",  "co",    "ca",   "viz",  "alg",  "algo", "cf",   "ed",   "eds",
      "e.g.", "i.e.", "w.r.t", "a.k.a", "u.s", "ph.d", "dept", "univ", "est",  "incl", "max",  "min",
      "avg",  "std",  "op",   "cit",  "corr", "dist", "fn",   "n.b"};
  return words;
}

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }
bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']' || c == '}'; }

// The whitespace-delimited word that ends at `end` (exclusive), minus one
// trailing period and any leading opening punctuation.
std::string word_before(std::string_view text, std::size_t end) {
  std::size_t start = text.rfind(' ', end == 0 ? 0 : end - 1);
  start = (start == std::string_view::npos) ? 0 : start + 1;
  std::string w(text.substr(start, end - start));
  while (!w.empty() && (w.front() == '(' || w.front() == '[' || w.front() == '"' || w.front() == '\'')) w.erase(0, 1);
  if (!w.empty() && w.back() == '.') w.pop_back();
  std::transform(w.begin(), w.end(), w.begin(), [](unsigned char c) { return std::tolower(c); });
  return w;
}

}  // namespace

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      pending = !out.empty();
      continue;
    }
    if (pending) out += ' ';
    pending = false;
    out += static_cast<char>(c);
  }
  return out;
}

std::vector<std::string> segment_sentences(std::string_view raw) {
  const std::string text = normalize_whitespace(raw);
  std::vector<std::string> out;
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_terminal(text[i])) {
      ++i;
      continue;
    }
    const std::size_t punct_start = i;
    while (i < text.size() && is_terminal(text[i])) ++i;
    while (i < text.size() && is_closer(text[i])) ++i;
    if (i < text.size() && text[i] != ' ') continue;  // "3.5", "e.g.," ...
    const std::size_t end = i;                      // exclusive end of the sentence
    if (end < text.size()) {
      const unsigned char next = static_cast<unsigned char>(text[end + 1]);
      if (std::islower(next)) continue;
      if (text[punct_start] == '.' && punct_start + 1 == end) {
        const std::string w = word_before(text, punct_start + 1);
        const bool initial = w.size() == 1 && std::isalpha(static_cast<unsigned char>(w[0]));
        if (initial || abbreviations().contains(w)) continue;
      }
    }
    out.emplace_back(text.substr(start, end - start));
    start = end + 1;
    i = start;
  }
  if (start < text.size()) out.emplace_back(text.substr(start));
  return out;
}

std::size_t proxy_token_count(std::string_view text) {
  std::size_t words = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++words;
    }
  }
  return static_cast<std::size_t>(std::ceil(static_cast<double>(words) * 1.3 - 1e-9));
}

ChunkPlan pack_chunks(std::span<const std::string> sentences, std::size_t token_budget, const TokenCounter& counter) {
  ChunkPlan plan;
  std::string current;
  std::size_t current_count = 0;
  auto flush = [&] {
    if (current_count == 0) return;
    plan.chunks.push_back(std::move(current));
    plan.sentence_counts.push_back(current_count);
    plan.over_budget.push_back(false);
    current.clear();
    current_count = 0;
  };
  for (const auto& s : sentences) {
    if (current_count > 0) {
      std::string candidate = current + ' ' + s;
      if (counter(candidate) <= token_budget) {
        current = std::move(candidate);
        ++current_count;
        continue;
      }
      flush();
    }
    if (counter(s) > token_budget) {
      plan.chunks.push_back(s);
      plan.sentence_counts.push_back(1);
      plan.over_budget.push_back(true);
      continue;
    }
    current = s;
    current_count = 1;
  }
  flush();
  return plan;
}

}  // namespace sdq
