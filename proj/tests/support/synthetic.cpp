#include "synthetic.hpp"

#include <fstream>

#include "sdq/embed.hpp"
#include "sdq/harmonize.hpp"

namespace sdq::testing {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
  static std::uint64_t counter = 0;
  const auto base = fs::temp_directory_path();
  for (;;) {
    const auto salt = mix64(reinterpret_cast<std::uintptr_t>(this) ^ mix64(++counter));
    path_ = base / ("sdq-" + tag + "-" + std::to_string(salt % 1000000007ULL));
    if (fs::create_directories(path_)) break;
  }
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::string random_text(Rng& rng, const std::vector<std::string>& vocab, std::size_t words) {
  std::string text;
  for (std::size_t i = 0; i < words; ++i) {
    if (i) text += ' ';
    text += vocab[rng.below(vocab.size())];
  }
  return text;
}

std::vector<std::string> numbered_vocab(const std::string& prefix, std::size_t n) {
  std::vector<std::string> v;
  v.reserve(n);
  for (std::size_t i = 0; i < n; ++i) v.push_back(prefix + std::to_string(i));
  return v;
}

PlantedSignal planted_signal(const EmbeddingProvider& provider, std::size_t n_train, std::size_t n_val,
                             std::size_t n_test, std::uint64_t seed, std::size_t vocab_size, std::size_t words,
                             double noise) {
  Rng rng(seed);
  const auto vocab = numbered_vocab("w", vocab_size);
  PlantedSignal out;
  out.weights.resize(provider.dimension());
  for (auto& w : out.weights) w = rng.normal();
  const std::size_t total = n_train + n_val + n_test;
  for (std::size_t i = 0; i < total; ++i) {
    EmbeddedExample ex;
    ex.paper_id = "p" + std::to_string(i);
    ex.publication_date = YearMonth{2000 + static_cast<int>(i / 12), static_cast<int>(i % 12) + 1};
    ex.paper_embedding = embed_text(random_text(rng, vocab, words), provider);
    double s = 0.0;
    for (std::size_t j = 0; j < out.weights.size(); ++j) s += out.weights[j] * ex.paper_embedding[j];
    ex.target = s + noise * rng.normal();
    auto& dst = i < n_train ? out.train : i < n_train + n_val ? out.validation : out.test;
    dst.push_back(std::move(ex));
  }
  return out;
}

namespace {

std::string word(Rng& rng) {
  static const char* syllables[] = {"ka", "lo", "mi", "ne", "ru", "sa", "ti", "vo", "qe", "zu", "\xc3\xa9", "x"};
  std::string w;
  const auto n = 1 + rng.below(4);
  for (std::size_t i = 0; i < n; ++i) w += syllables[rng.below(std::size(syllables))];
  return w;
}

std::string sentence(Rng& rng, std::size_t words) {
  std::string s;
  for (std::size_t i = 0; i < words; ++i) s += (i ? " " : "") + word(rng);
  return s;
}

std::optional<double> maybe_unit(Rng& rng) {
  if (rng.below(3) == 0) return std::nullopt;
  switch (rng.below(4)) {
    case 0: return 0.0;
    case 1: return 1.0;
    default: return rng.uniform();
  }
}

}  // namespace

PaperRecord random_record(Rng& rng, std::size_t index) {
  PaperRecord r;
  r.id = "paper-" + std::to_string(index) + "-" + word(rng);
  r.title = sentence(rng, 1 + rng.below(8));
  r.abstract = rng.below(10) == 0 ? std::string() : sentence(rng, rng.below(40));
  if (rng.below(3) == 0) r.abstract += " \"quoted\"\t\\ and\nnewline";
  for (auto t : {SectionType::Introduction, SectionType::Background, SectionType::Methodology,
                 SectionType::ExperimentsAndResults, SectionType::Conclusion}) {
    if (rng.below(2)) r.sections[t] = sentence(rng, rng.below(30));
  }
  if (rng.below(2)) r.hypothesis = Hypothesis{sentence(rng, 1 + rng.below(10)), sentence(rng, 1 + rng.below(10))};
  const auto n_reviews = rng.below(5);
  for (std::size_t i = 0; i < n_reviews; ++i) {
    ReviewRecord rev;
    rev.text_review = rng.below(4) == 0 ? std::string() : sentence(rng, rng.below(20));
    for (auto a : kReviewAttributes) rev.get(a) = maybe_unit(rng);
    if (rev.text_review.empty() && !rev.has_numeric()) rev.score = 0.5;
    if (rng.below(4) == 0) rev.ethics = sentence(rng, 2);
    r.reviews.push_back(std::move(rev));
  }
  const auto n_refs = rng.below(4);
  for (std::size_t i = 0; i < n_refs; ++i) {
    ReferenceRecord ref;
    ref.title = sentence(rng, 1 + rng.below(6));
    if (rng.below(2)) ref.abstract = sentence(rng, rng.below(20));
    if (rng.below(2)) ref.corpus_id = std::to_string(rng.below(1000000));
    if (rng.below(3) == 0) ref.arxiv_id = "2101." + std::to_string(10000 + rng.below(89999));
    if (rng.below(3) == 0) ref.intent = rng.below(2) ? "background" : "methodology";
    ref.is_influential = rng.below(2) == 1;
    r.references.push_back(std::move(ref));
  }
  r.venue = rng.below(2) ? "ICLR-2023" : "ACL-OCL";
  r.publication_date = YearMonth{1990 + static_cast<int>(rng.below(35)), 1 + static_cast<int>(rng.below(12))};
  switch (rng.below(4)) {
    case 0: r.decision = Decision::Accepted; break;
    case 1: r.decision = Decision::Rejected; break;
    case 2: r.decision = Decision::Unknown; break;
    default: break;
  }
  if (r.decision != Decision::Rejected && rng.below(2)) {
    r.citation_count = rng.below(100000);
    if (rng.below(2)) r.influential_citation_count = rng.below(*r.citation_count + 1);
  }
  if (rng.below(3) == 0) {
    std::vector<std::string> fields;
    const auto n = rng.below(3);
    for (std::size_t i = 0; i < n; ++i) fields.push_back(word(rng));
    r.field_of_study = fields;
  }
  return r;
}

std::vector<PaperRecord> planted_corpus(std::size_t n, std::uint64_t seed, std::size_t dim) {
  Rng rng(seed);
  const auto vocab = numbered_vocab("w", 500);
  DeterministicEmbedder embedder(seed, dim);
  std::vector<double> w(dim);
  for (auto& x : w) x = rng.normal();
  std::vector<PaperRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    PaperRecord r;
    r.id = "p" + std::to_string(i);
    r.title = random_text(rng, vocab, 6);
    r.abstract = random_text(rng, vocab, 24);
    r.venue = i % 2 ? "ICLR-2023" : "NeurIPS-2022";
    r.publication_date = YearMonth{2015 + static_cast<int>((i / 12) % 8), static_cast<int>(i % 12) + 1};
    r.decision = Decision::Accepted;
    const auto e = embed_text(r.title + " " + r.abstract, embedder);
    double s = 0.0;
    for (std::size_t j = 0; j < dim; ++j) s += w[j] * e[j];
    const auto months = months_elapsed(r.publication_date, YearMonth{2024, 1});
    r.citation_count = static_cast<std::uint64_t>(std::llround(months * std::expm1(std::max(0.0, 2.0 + s))));
    r.references.push_back({random_text(rng, vocab, 5), random_text(rng, vocab, 12), {}, {}, {}, false});
    for (int k = 0; k < 3; ++k) {
      ReviewRecord rev;
      rev.text_review = random_text(rng, vocab, 10);
      rev.score = std::clamp(0.5 + 0.1 * s + 0.05 * rng.normal(), 0.0, 1.0);
      rev.confidence = rng.uniform();
      rev.novelty = rng.uniform();
      r.reviews.push_back(std::move(rev));
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<RawPaper> separable_section_papers(std::size_t n_papers, std::uint64_t seed,
                                               std::size_t paragraphs_per_section) {
  static const char* headings[5][3] = {{"1 Introduction", "I. INTRODUCTION", "Introduction"},
                                       {"2 Related Work", "Background", "II. Related work"},
                                       {"3 Method", "Methodology", "3. Algorithm"},
                                       {"4 Experiments", "Results", "IV. Empirical Evaluation"},
                                       {"5 Conclusion", "Conclusion & Discussion", "Further Work"}};
  static const char* prefixes[5] = {"intro", "related", "method", "experiment", "conclude"};
  Rng rng(seed);
  std::vector<std::vector<std::string>> vocab;
  for (auto p : prefixes) vocab.push_back(numbered_vocab(p, 40));
  std::vector<RawPaper> papers;
  for (std::size_t i = 0; i < n_papers; ++i) {
    RawPaper p;
    p.id = "raw" + std::to_string(i);
    for (std::size_t c = 0; c < 5; ++c) {
      for (std::size_t k = 0; k < paragraphs_per_section; ++k) {
        std::string text;
        const auto sentences = 2 + rng.below(3);
        for (std::size_t s = 0; s < sentences; ++s) text += random_text(rng, vocab[c], 6 + rng.below(6)) + ". ";
        p.sections.push_back({headings[c][rng.below(3)], text});
      }
    }
    p.sections.push_back({"Acknowledgements", "we thank everyone."});
    papers.push_back(std::move(p));
  }
  return papers;
}

std::vector<std::vector<std::string>> planted_topic_docs(std::size_t n_docs, std::size_t topics, std::uint64_t seed,
                                                         std::vector<std::size_t>& labels,
                                                         std::size_t words_per_topic, std::size_t doc_length) {
  Rng rng(seed);
  std::vector<std::vector<std::string>> vocab;
  for (std::size_t k = 0; k < topics; ++k) vocab.push_back(numbered_vocab("t" + std::to_string(k) + "w", words_per_topic));
  std::vector<std::vector<std::string>> docs;
  labels.clear();
  for (std::size_t d = 0; d < n_docs; ++d) {
    const std::size_t k = d % topics;
    labels.push_back(k);
    std::vector<std::string> doc;
    for (std::size_t i = 0; i < doc_length; ++i) doc.push_back(vocab[k][rng.below(words_per_topic)]);
    docs.push_back(std::move(doc));
  }
  return docs;
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  for (const auto& l : lines) out << l << '\n';
}

}  // namespace sdq::testing
