#include <algorithm>
#include <cctype>
#include <map>
#include <unordered_map>

#include "sdq/topics.hpp"

namespace sdq {
namespace {

const std::map<std::string, std::string, std::less<>>& exceptions() {
  static const std::map<std::string, std::string, std::less<>> table = {
      {"data", "datum"},           {"criteria", "criterion"},   {"phenomena", "phenomenon"},
      {"analyses", "analysis"},    {"hypotheses", "hypothesis"}, {"theses", "thesis"},
      {"bases", "basis"},          {"crises", "crisis"},        {"indices", "index"},
      {"matrices", "matrix"},      {"vertices", "vertex"},      {"appendices", "appendix"},
      {"children", "child"},       {"women", "woman"},          {"men", "man"},
      {"people", "person"},        {"mice", "mouse"},           {"feet", "foot"},
      {"teeth", "tooth"},          {"geese", "goose"},          {"lives", "life"},
      {"leaves", "leaf"},          {"halves", "half"},          {"selves", "self"},
      {"knives", "knife"},         {"wolves", "wolf"},          {"shelves", "shelf"},
      {"radii", "radius"},         {"stimuli", "stimulus"},     {"foci", "focus"},
      {"nuclei", "nucleus"},       {"loci", "locus"},           {"corpora", "corpus"},
      {"genera", "genus"},         {"schemata", "schema"},      {"lemmata", "lemma"},
      {"media", "medium"},         {"strata", "stratum"},       {"optima", "optimum"},
      {"maxima", "maximum"},       {"minima", "minimum"},       {"spectra", "spectrum"},
      {"series", "series"},        {"species", "species"},      {"news", "news"},
      {"bias", "bias"},            {"biased", "bias"},          {"biases", "bias"},
      {"focus", "focus"},          {"focused", "focus"},        {"focusing", "focus"},
      {"focuses", "focus"},        {"used", "use"},             {"using", "use"},
      {"uses", "use"},             {"caused", "cause"},         {"causing", "cause"},
      {"added", "add"},            {"adding", "add"},           {"embed", "embed"},
      {"embeds", "embed"},         {"hundred", "hundred"},      {"monitored", "monitor"},
      {"monitoring", "monitor"},   {"belonged", "belong"},      {"belonging", "belong"},
      {"installed", "install"},    {"installing", "install"},   {"seeing", "see"},
      {"agreed", "agree"},         {"freed", "free"},           {"went", "go"},
      {"gone", "go"},              {"made", "make"},            {"found", "find"},
      {"shown", "show"},           {"taken", "take"},           {"given", "give"},
      {"written", "write"},        {"chosen", "choose"},        {"known", "know"},
      {"better", "good"},          {"best", "good"},            {"ran", "run"},
      {"led", "lead"},             {"built", "build"},          {"learnt", "learn"},
      {"thing", "thing"},          {"things", "thing"},         {"string", "string"},
      {"strings", "string"},       {"ring", "ring"},            {"king", "king"},
      {"morning", "morning"},      {"evening", "evening"},      {"ceiling", "ceiling"},
      {"wedding", "wedding"},      {"pudding", "pudding"},      {"spring", "spring"},
      {"bed", "bed"},              {"red", "red"},              {"shed", "shed"},
      {"seed", "seed"},            {"speed", "speed"},          {"need", "need"},
      {"feed", "feed"},            {"proceed", "proceed"},      {"exceed", "exceed"},
      {"succeed", "succeed"},      {"indeed", "indeed"},        {"sacred", "sacred"},
      {"naked", "naked"},          {"wicked", "wicked"},        {"crooked", "crooked"},
      {"according", "according"},  {"gradient", "gradient"},    {"less", "less"},
      {"lens", "lens"},            {"gas", "gas"},              {"atlas", "atlas"},
      {"canvas", "canvas"},        {"alias", "alias"},          {"physics", "physics"},
      {"was", "was"},              {"has", "has"},              {"does", "does"},
  };
  return table;
}

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

bool has_vowel(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](char c) { return is_vowel(c) || c == 'y'; });
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

// consonant-vowel-consonant ending with a single vowel group, e.g. "mak", "shap"
bool short_cvc(std::string_view s) {
  if (s.size() < 3 || s.size() > 4) return false;
  const char c3 = s[s.size() - 1], v = s[s.size() - 2], c1 = s[s.size() - 3];
  if (is_vowel(c3) || !is_vowel(v) || is_vowel(c1)) return false;
  if (c3 == 'w' || c3 == 'x' || c3 == 'y') return false;
  const std::size_t vowels = static_cast<std::size_t>(std::count_if(s.begin(), s.end(), is_vowel));
  return vowels == 1;
}

// Repairs a stem left by removing "-ing" or "-ed".
std::string repair_stem(std::string s) {
  const std::size_t n = s.size();
  if (n >= 2 && s[n - 1] == s[n - 2] && !is_vowel(s[n - 1])) {
    // "embedd" -> "embed", "modell" -> "model", but "call", "fill", "miss", "buzz" stay
    const char c = s[n - 1];
    if (c == 's' || c == 'z') return s;
    if (c == 'l' && n <= 4) return s;
    s.pop_back();
    return s;
  }
  const char last = s[n - 1];
  const char prev = n >= 2 ? s[n - 2] : '\0';
  const char prev2 = n >= 3 ? s[n - 3] : '\0';
  const bool single_vowel = is_vowel(prev) && prev2 != '\0' && !is_vowel(prev2);
  bool add_e = false;
  if (last == 'v' || last == 'z' || last == 'c' || last == 'u') {
    add_e = true;
  } else if (ends_with(s, "at") && !is_vowel(prev2)) {
    add_e = true;
  } else if (last == 'l' && !is_vowel(prev) && prev != 'l' && prev != 'r') {
    add_e = true;  // "sampl", "enabl", "handl"
  } else if (last == 'd' && single_vowel && (prev == 'i' || prev == 'o' || prev == 'u')) {
    add_e = true;  // "provid", "encod", "includ"
  } else if (last == 't' && single_vowel && prev == 'u') {
    add_e = true;  // "comput", "distribut"
  } else if (last == 'r' && single_vowel && prev != 'e' && n > 4) {
    add_e = true;  // "compar", "requir", "explor"
  } else if (last == 'n' && single_vowel && prev == 'i' && n > 4) {
    add_e = true;  // "combin", "defin", "determin"
  } else if (last == 'm' && single_vowel && prev == 'u') {
    add_e = true;  // "assum"
  } else if (last == 's' && is_vowel(prev) && prev != 'u' && !ends_with(s, "is")) {
    add_e = true;  // "propos", "increas", "releas"
  } else if (last == 'g' && (prev == 'r' || prev == 'n' || prev == 'a') && n > 4) {
    add_e = true;  // "chang", "emerg", "leverag"
  } else if (short_cvc(s)) {
    add_e = true;  // "mak", "shap", "scal", "nam"
  }
  if (add_e) s.push_back('e');
  return s;
}

}  // namespace

const std::set<std::string, std::less<>>& stopwords() {
  static const std::set<std::string, std::less<>> words = {
      "a", "about", "above", "after", "again", "against", "ain", "all", "also", "am", "an", "and", "any", "are",
      "aren", "as", "at", "be", "because", "been", "before", "being", "below", "between", "both", "but", "by",
      "can", "could", "couldn", "did", "didn", "do", "does", "doesn", "doing", "don", "down", "during", "each",
      "et", "few", "for", "from", "further", "had", "hadn", "has", "hasn", "have", "haven", "having", "he", "her",
      "here", "hers", "herself", "him", "himself", "his", "how", "however", "i", "if", "in", "into", "is", "isn",
      "it", "its", "itself", "just", "may", "me", "might", "more", "most", "must", "mustn", "my", "myself",
      "needn", "no", "nor", "not", "now", "of", "off", "on", "once", "only", "or", "other", "our", "ours",
      "ourselves", "out", "over", "own", "same", "shall", "shan", "she", "should", "shouldn", "so", "some",
      "such", "than", "that", "the", "their", "theirs", "them", "themselves", "then", "there", "these", "they",
      "this", "those", "through", "thus", "to", "too", "under", "until", "up", "upon", "very", "via", "was",
      "wasn", "we", "were", "weren", "what", "when", "where", "which", "while", "who", "whom", "why", "will",
      "with", "within", "without", "won", "would", "wouldn", "yet", "you", "your", "yours", "yourself",
      "yourselves"};
  return words;
}

std::string normalize_token(std::string_view token) {
  std::string w(token);
  if (auto it = exceptions().find(w); it != exceptions().end()) return it->second;
  if (w.size() <= 3 || !std::all_of(w.begin(), w.end(), [](char c) { return c >= 'a' && c <= 'z'; })) return w;

  // Plurals.
  if (ends_with(w, "ies") && w.size() > 4) return w.substr(0, w.size() - 3) + "y";
  if (ends_with(w, "sses")) return w.substr(0, w.size() - 2);
  if (ends_with(w, "ches") || ends_with(w, "shes") || ends_with(w, "xes")) return w.substr(0, w.size() - 2);
  if (ends_with(w, "s") && !ends_with(w, "ss") && !ends_with(w, "us") && !ends_with(w, "is") &&
      !ends_with(w, "ics") && !ends_with(w, "ous") && !ends_with(w, "ys")) {
    return w.substr(0, w.size() - 1);
  }

  // Past tense / participles.
  if (ends_with(w, "ied") && w.size() > 4) return w.substr(0, w.size() - 3) + "y";
  if (ends_with(w, "eed")) return w;
  for (std::string_view suffix : {std::string_view("ing"), std::string_view("ed")}) {
    if (!ends_with(w, suffix)) continue;
    std::string stem = w.substr(0, w.size() - suffix.size());
    if (stem.size() < 3 || !has_vowel(stem)) return w;
    return repair_stem(std::move(stem));
  }
  return w;
}

std::vector<std::string> base_tokens(std::string_view title, std::string_view abstract) {
  std::vector<std::string> out;
  std::string current;
  auto flush = [&]() {
    if (current.size() >= 3 && !stopwords().count(current)) {
      std::string lemma = normalize_token(current);
      if (lemma.size() >= 3 && !stopwords().count(lemma)) out.push_back(std::move(lemma));
    }
    current.clear();
  };
  for (std::string_view part : {title, std::string_view(" "), abstract}) {
    for (char ch : part) {
      const auto c = static_cast<unsigned char>(ch);
      if (std::isalnum(c)) {
        current.push_back(static_cast<char>(std::tolower(c)));
      } else {
        flush();
      }
    }
  }
  flush();
  return out;
}

void PhraseModel::fit(const std::vector<std::vector<std::string>>& docs) {
  std::unordered_map<std::string, std::size_t> bi, tri;
  for (const auto& d : docs) {
    for (std::size_t i = 0; i + 1 < d.size(); ++i) {
      ++bi[d[i] + "_" + d[i + 1]];
      if (i + 2 < d.size()) ++tri[d[i] + "_" + d[i + 1] + "_" + d[i + 2]];
    }
  }
  bigrams_.clear();
  trigrams_.clear();
  for (const auto& [k, c] : bi) {
    if (c >= threshold_) bigrams_.insert(k);
  }
  for (const auto& [k, c] : tri) {
    if (c >= threshold_) trigrams_.insert(k);
  }
}

std::vector<std::string> PhraseModel::apply(std::vector<std::string> tokens) const {
  const std::size_t n = tokens.size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    std::string b = tokens[i] + "_" + tokens[i + 1];
    if (bigrams_.count(b)) tokens.push_back(b);
  }
  for (std::size_t i = 0; i + 2 < n; ++i) {
    std::string t = tokens[i] + "_" + tokens[i + 1] + "_" + tokens[i + 2];
    if (trigrams_.count(t)) tokens.push_back(t);
  }
  return tokens;
}

std::vector<std::string> preprocess(std::string_view title, std::string_view abstract) {
  return base_tokens(title, abstract);
}

std::vector<std::vector<std::string>> preprocess_corpus(
    const std::vector<std::pair<std::string, std::string>>& title_abstracts, std::size_t phrase_threshold) {
  std::vector<std::vector<std::string>> docs;
  docs.reserve(title_abstracts.size());
  for (const auto& [t, a] : title_abstracts) docs.push_back(base_tokens(t, a));
  PhraseModel phrases(phrase_threshold);
  phrases.fit(docs);
  for (auto& d : docs) d = phrases.apply(std::move(d));
  return docs;
}

}  // namespace sdq
