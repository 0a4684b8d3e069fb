#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdq/corpus.hpp"
#include "sdq/embed.hpp"
#include "sdq/layers.hpp"
#include "sdq/params.hpp"

namespace sdq {

// Trims, case-folds, collapses whitespace and strips leading numbering
// ("3.", "3.1", "IV.", "§2") and trailing ':' or '.'.
std::string normalize_heading(std::string_view heading);

/// Section type -> heading synonyms. Synonyms are unique across types after
/// normalization and every type has at least one.
class SynonymTable {
 public:
  SynonymTable() = default;
  explicit SynonymTable(std::map<SectionType, std::vector<std::string>> synonyms);  // validates

  static SynonymTable defaults();
  // {"introduction": [...], "background": [...], ...}; all five keys required.
  static SynonymTable from_json(const nlohmann::json& j);
  static SynonymTable load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  std::optional<SectionType> match(std::string_view heading) const;
  const std::map<SectionType, std::vector<std::string>>& synonyms() const noexcept { return synonyms_; }

 private:
  std::map<SectionType, std::vector<std::string>> synonyms_;
  std::map<std::string, SectionType, std::less<>> index_;
};

struct RawSection {
  std::string heading;
  std::string text;
};

// A paper as (heading, body) pairs, before section classification.
struct RawPaper {
  std::string id;
  std::vector<RawSection> sections;
};

// JSONL of {"id": ..., "sections": [{"heading": ..., "text": ...}, ...]}
std::vector<RawPaper> parse_raw_papers(std::string_view jsonl);
std::vector<RawPaper> load_raw_papers(const std::filesystem::path& path);

struct SectionExample {
  std::vector<std::string> sentences;
  SectionType label = SectionType::Introduction;
  std::string source_paper_id;
};

struct SectionDataset {
  std::vector<SectionExample> examples;
  std::size_t matched = 0;
  std::size_t skipped = 0;
  std::map<std::string, std::size_t> skipped_headings;  // normalized heading -> count
  std::array<std::size_t, 5> per_label{};
};

SectionDataset build_section_dataset(const std::vector<RawPaper>& papers, const SynonymTable& synonyms);

struct SectionClassifierConfig {
  std::size_t layers = 2;
  std::size_t heads = 8;
  std::size_t ff_hidden = 1024;
  double dropout = 0.3;
  double learning_rate = 1e-4;
  std::size_t batch_size = 128;
  std::size_t epochs = 20;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static SectionClassifierConfig from_json(const nlohmann::json& j, SectionClassifierConfig base);
};

/// Stacked encoder layers over sentence embeddings, mean-pooled and mapped
/// to five logits.
class SectionClassifier {
 public:
  ParamSet<float> params;
  SectionClassifierConfig config;
  std::size_t dim = kEmbeddingDim;
  std::string provider_id;

  static SectionClassifier create(const SectionClassifierConfig& config, std::size_t dim, std::string provider_id);

  // Softmax over the five section types (kSectionTypes order).
  std::array<double, 5> probabilities(const std::vector<EmbeddingVector>& sentences) const;

  void save(const std::filesystem::path& path) const;
  static SectionClassifier load(const std::filesystem::path& path);
};

// Logits graph for a batch; each element is one example's sentence list.
template <typename T>
Var section_logits(Tape<T>& tape, ParamSet<T>& params, const SectionClassifierConfig& config, std::size_t dim,
                   const std::vector<const std::vector<EmbeddingVector>*>& batch, bool training, Rng& rng);

template <typename T>
void init_section_params(ParamSet<T>& params, const SectionClassifierConfig& config, std::size_t dim, Rng& rng);

struct SectionEpoch {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

struct SectionTrainResult {
  SectionClassifier classifier;  // parameters at the lowest validation loss
  std::vector<SectionEpoch> history;
  std::size_t best_epoch = 0;
  std::array<std::size_t, 3> split_counts{};  // train, validation, test
  double test_accuracy = 0.0;

  nlohmann::json report() const;
};

/// Random split stratified by label (70/15/15, largest remainder per class),
/// per-sentence embeddings through `provider`, softmax cross-entropy with
/// Adam. Throws ValidationError when fewer than two labels are present.
SectionTrainResult train_section_classifier(const SectionDataset& dataset, const EmbeddingProvider& provider,
                                            const SectionClassifierConfig& config);

struct SectionPrediction {
  SectionType label = SectionType::Introduction;
  std::array<double, 5> probabilities{};
};

// Segments the paragraph into sentences and classifies it. Throws
// ValidationError for empty input.
SectionPrediction classify_section(std::string_view paragraph, const SectionClassifier& classifier,
                                   const EmbeddingProvider& provider);

}  // namespace sdq
