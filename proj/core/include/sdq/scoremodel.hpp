#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdq/corpus.hpp"
#include "sdq/embed.hpp"
#include "sdq/layers.hpp"
#include "sdq/params.hpp"
#include "sdq/tape.hpp"

namespace sdq {

enum class ModelKind { NoContext, Context };
enum class TargetKind { CitationLogAvg, ReviewScoreMean, ImpactMean };
enum class RepresentationKind { TitleAbstract, Hypothesis, Introduction, RelatedWork, Methodology, ExperimentsResults, Conclusion };
enum class ContextKind { None, FullPaperSections, ReferenceTitlesAbstracts };
enum class Objective { Pairwise, Regression };

std::string_view to_string(ModelKind v);
std::string_view to_string(TargetKind v);
std::string_view to_string(RepresentationKind v);
std::string_view to_string(ContextKind v);
std::string_view to_string(Objective v);
ModelKind model_kind_from(std::string_view s);
TargetKind target_kind_from(std::string_view s);
RepresentationKind representation_kind_from(std::string_view s);
ContextKind context_kind_from(std::string_view s);
Objective objective_from(std::string_view s);

struct EmbeddedExample {
  std::string paper_id;
  YearMonth publication_date;
  EmbeddingVector paper_embedding;
  std::vector<EmbeddingVector> context_embeddings;
  std::optional<double> target;
};

struct ScoreArchitecture {
  ModelKind kind = ModelKind::NoContext;
  std::size_t dim = kEmbeddingDim;
  std::size_t mlp_hidden = 256;
  std::size_t heads = 1;
  std::size_t ff_hidden = 1024;

  MlpShape mlp_shape() const { return {dim, mlp_hidden}; }
  EncoderShape encoder_shape(double dropout) const { return {dim, heads, ff_hidden, dropout}; }
};

/// Batched scorer graph: (N x 1) scores for the given examples. NoContext
/// runs the MLP on the paper embedding; Context encodes [paper, ctx_1..ctx_k]
/// per example and feeds the slot-0 output to the same MLP.
template <typename T>
Var score_graph(Tape<T>& tape, ParamSet<T>& params, const ScoreArchitecture& arch, double dropout,
                std::span<const EmbeddedExample* const> batch, bool training, Rng& rng);

template <typename T>
void init_score_params(ParamSet<T>& params, const ScoreArchitecture& arch, std::uint64_t seed);

/// f_theta plus the metadata that travels with its checkpoint.
class ScoreModel {
 public:
  ScoreArchitecture arch;
  ParamSet<float> params;
  double dropout = 0.3;
  std::string provider_id;
  TargetKind target_kind = TargetKind::CitationLogAvg;
  RepresentationKind representation_kind = RepresentationKind::TitleAbstract;
  ContextKind context_kind = ContextKind::None;
  std::string config_hash;  // of the TrainConfig that produced it; empty if untrained

  // Xavier-initialized model. Context kind defaults to reference titles and
  // abstracts for Context models.
  static ScoreModel create(const ScoreArchitecture& arch, std::uint64_t seed, std::string provider_id = {});

  void validate() const;  // NoContext <=> context_kind == None
  double predict(const EmbeddedExample& example) const;
  std::vector<double> predict_batch(std::span<const EmbeddedExample> examples, std::size_t batch_size = 256) const;

  nlohmann::json metadata() const;
  void save(const std::filesystem::path& path) const;
  static ScoreModel load(const std::filesystem::path& path);
};

// -log sigma(f1 - f2) for label 1, -log(1 - sigma(f1 - f2)) for label 0.
double pairwise_loss(double f1, double f2, int label) noexcept;
double regression_loss(double prediction, double target) noexcept;

/// Random unordered index pairs over items with targets: each draw picks two
/// distinct indices uniformly, discards ties and labels the (lower index,
/// higher index) pair by target order. Deterministic in `seed`. Throws if no
/// non-tied pair exists.
std::vector<IndexPair> make_pairs(std::span<const double> targets, std::uint64_t seed, std::size_t count);

struct TrainConfig {
  double learning_rate = 5e-5;
  double dropout = 0.3;
  std::size_t epochs = 100;
  std::size_t batch_size = 256;
  std::uint64_t seed = 0;
  Objective objective = Objective::Pairwise;
  std::optional<std::size_t> pairs_per_epoch;  // defaults to |train_set|
  std::vector<double> grid_learning_rates = {0.0001, 0.001, 0.0005, 0.00005};
  std::vector<double> grid_dropouts = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};

  static TrainConfig defaults_for(ModelKind kind);
  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j, TrainConfig base);
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainResult {
  ScoreModel best;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;  // 0 = initial parameters
  double best_val_loss = 0.0;
};

class TrainingError : public NumericError {
 public:
  using NumericError::NumericError;
};

// Validation loss of a model on a set under the given objective (inference mode).
double validation_loss(const ScoreModel& model, std::span<const EmbeddedExample> val_set, Objective objective,
                       std::uint64_t seed);

TrainResult train(const ScoreModel& initial, std::span<const EmbeddedExample> train_set,
                  std::span<const EmbeddedExample> val_set, const TrainConfig& config);

struct GridCell {
  double learning_rate = 0.0;
  double dropout = 0.0;
  std::optional<double> val_loss;
  std::size_t best_epoch = 0;
  std::optional<std::string> error;
};

struct GridResult {
  double best_learning_rate = 0.0;
  double best_dropout = 0.0;
  TrainResult best;
  std::vector<GridCell> cells;
};

// Trains every (lr, dropout) cell from the same initial parameters and seed;
// picks the lowest validation loss, ties to the lower lr then lower dropout.
// Failed cells are recorded and skipped; throws only when all cells fail.
GridResult grid_search(const ScoreModel& initial, std::span<const EmbeddedExample> train_set,
                       std::span<const EmbeddedExample> val_set, const TrainConfig& config);

void write_history_jsonl(const std::filesystem::path& path, const std::vector<EpochRecord>& history);

}  // namespace sdq
