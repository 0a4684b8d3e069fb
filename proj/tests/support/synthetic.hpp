#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sdq/corpus.hpp"
#include "sdq/embed.hpp"
#include "sdq/rng.hpp"
#include "sdq/scoremodel.hpp"
#include "sdq/sections.hpp"

namespace sdq::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::string random_text(Rng& rng, const std::vector<std::string>& vocab, std::size_t words);
std::vector<std::string> numbered_vocab(const std::string& prefix, std::size_t n);

// Targets follow s = w . e(text) + N(0, noise) with w ~ N(0, 1)^dim and e the
// provider embedding of a random bag of `words` vocabulary tokens.
struct PlantedSignal {
  std::vector<double> weights;
  std::vector<EmbeddedExample> train, validation, test;
};

PlantedSignal planted_signal(const EmbeddingProvider& provider, std::size_t n_train, std::size_t n_val,
                             std::size_t n_test, std::uint64_t seed, std::size_t vocab = 2000,
                             std::size_t words = 30, double noise = 0.05);

// A valid record exercising every optional field at random.
PaperRecord random_record(Rng& rng, std::size_t index);

// Corpus whose citation counts rise with a planted score of the title and
// abstract, with reviews on a 0..1 scale and monthly publication dates.
std::vector<PaperRecord> planted_corpus(std::size_t n, std::uint64_t seed, std::size_t dim = kEmbeddingDim);

// Each of the five section types draws its text from its own word list.
std::vector<RawPaper> separable_section_papers(std::size_t n_papers, std::uint64_t seed,
                                               std::size_t paragraphs_per_section = 1);

// Documents drawn from `topics` disjoint vocabularies; `labels` receives the
// planted topic of each document.
std::vector<std::vector<std::string>> planted_topic_docs(std::size_t n_docs, std::size_t topics, std::uint64_t seed,
                                                         std::vector<std::size_t>& labels,
                                                         std::size_t words_per_topic = 30, std::size_t doc_length = 40);

// Writes lines to `path`, one per element.
void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines);

}  // namespace sdq::testing
