#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdq/harmonize.hpp"
#include "sdq/metrics.hpp"
#include "sdq/scoremodel.hpp"

namespace sdq {

// ---------------------------------------------------------------------------
// Preprocessing

const std::set<std::string, std::less<>>& stopwords();

// Rule-based lemma: irregular forms from an exception table, then plural,
// "-ing" and "-ed" stripping with a few spelling repairs ("studies" ->
// "study", "embedding" -> "embed", "proposed" -> "propose").
std::string normalize_token(std::string_view token);

// title + abstract, lowercased, split on non-alphanumerics; stopwords and
// tokens shorter than three characters dropped; normalize_token applied.
std::vector<std::string> base_tokens(std::string_view title, std::string_view abstract);

/// Corpus-level collocations. A bigram (trigram) qualifies when its adjacent
/// occurrences across the corpus reach `threshold`; qualifying phrases found
/// in a document are appended to its tokens joined with '_'.
class PhraseModel {
 public:
  explicit PhraseModel(std::size_t threshold = 20) : threshold_(threshold) {}

  void fit(const std::vector<std::vector<std::string>>& docs);
  std::vector<std::string> apply(std::vector<std::string> tokens) const;

  const std::set<std::string>& bigrams() const noexcept { return bigrams_; }
  const std::set<std::string>& trigrams() const noexcept { return trigrams_; }

 private:
  std::size_t threshold_;
  std::set<std::string> bigrams_;
  std::set<std::string> trigrams_;
};

// Single document without corpus statistics (no phrases).
std::vector<std::string> preprocess(std::string_view title, std::string_view abstract);
// Whole corpus: base tokens plus phrases learned over all documents.
std::vector<std::vector<std::string>> preprocess_corpus(
    const std::vector<std::pair<std::string, std::string>>& title_abstracts, std::size_t phrase_threshold = 20);

// ---------------------------------------------------------------------------
// LDA

struct LdaConfig {
  std::size_t topics = 13;
  std::size_t iterations = 1000;
  std::optional<double> alpha;  // defaults to 50 / topics
  double beta = 0.01;
  std::uint64_t seed = 0;

  double alpha_value() const { return alpha.value_or(50.0 / static_cast<double>(topics)); }
  void validate() const;
};

// Sampler counts, exposed to iteration observers.
struct LdaState {
  std::size_t topics = 0;
  std::size_t vocabulary = 0;
  const std::vector<std::vector<std::uint32_t>>* words = nullptr;
  const std::vector<std::vector<std::uint32_t>>* assignments = nullptr;
  const std::vector<std::uint64_t>* topic_totals = nullptr;      // n_k
  const std::vector<std::uint64_t>* topic_word = nullptr;        // n_kw, row-major K x V
  const std::vector<std::uint64_t>* doc_topic = nullptr;         // n_dk, row-major D x K
  double alpha = 0.0;
  double beta = 0.0;

  std::uint64_t token_count() const;
  // log p(w, z) under the collapsed model.
  double log_likelihood() const;
};

using GibbsObserver = std::function<void(std::size_t iteration, const LdaState&)>;

struct LdaModel {
  std::size_t topics = 0;
  std::vector<std::string> vocabulary;
  std::vector<double> topic_word;  // phi, row-major K x V
  double alpha = 0.0;
  double beta = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::vector<std::uint32_t>> assignments;  // training tokens (in-vocabulary order of each doc)
  std::vector<double> log_likelihood_trace;             // one value per iteration

  double phi(std::size_t topic, std::size_t word) const { return topic_word[topic * vocabulary.size() + word]; }
  std::optional<std::size_t> word_id(std::string_view word) const;

  void save(const std::filesystem::path& path) const;
  static LdaModel load(const std::filesystem::path& path);
  std::string serialize() const;
  static LdaModel deserialize(std::string_view bytes);
};

/// Collapsed Gibbs sampling with symmetric priors. The vocabulary is the
/// sorted set of all tokens. Throws ValidationError for an empty corpus,
/// an empty vocabulary or fewer documents than topics.
LdaModel fit_lda(const std::vector<std::vector<std::string>>& docs, const LdaConfig& config,
                 const GibbsObserver& observer = {});

struct TopicPosterior {
  std::size_t topic = 0;
  std::vector<double> theta;  // doc-topic distribution
};

/// Gibbs-samples only this document's assignments with phi held fixed and
/// returns the argmax of the averaged posterior (ties to the lowest id).
/// Absent when no token is in the vocabulary.
std::optional<TopicPosterior> dominant_topic(const LdaModel& model, const std::vector<std::string>& doc,
                                             std::size_t iterations = 50);

std::vector<std::string> top_words(const LdaModel& model, std::size_t topic, std::size_t n);

struct TopicLabel {
  std::string paper_id;
  std::optional<std::size_t> topic;
  double probability = 0.0;
};

// CSV "paper_id,topic_id,probability"; unlabeled papers have empty fields.
std::string labels_to_csv(const std::vector<TopicLabel>& labels);
std::vector<TopicLabel> labels_from_csv(std::string_view csv);

// ---------------------------------------------------------------------------
// Per-topic score models

struct TopicReport {
  std::size_t topic = 0;
  std::size_t n_samples = 0;
  std::optional<MetricReport> metrics;
  std::optional<std::string> skipped;  // reason when not trained
  nlohmann::json to_json() const;
};

struct PerTopicConfig {
  std::size_t top_topics = 5;
  std::size_t min_size = 200;
  SplitSpec split;
  TrainConfig train;
  ScoreArchitecture architecture;
};

/// For the `top_topics` most frequent labels (ties to the lower id), trains a
/// score model on that topic's examples under a temporal split and reports
/// its test metrics. Topics below `min_size` are reported as skipped.
std::vector<TopicReport> per_topic_training(const std::vector<EmbeddedExample>& examples,
                                            const std::map<std::string, std::size_t>& labels,
                                            const PerTopicConfig& config);

}  // namespace sdq
