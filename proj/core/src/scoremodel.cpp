#include "sdq/scoremodel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <unordered_map>

#include <fmt/format.h>

#include "sdq/checkpoint.hpp"

namespace sdq {
namespace {

constexpr const char* kMlp = "mlp";
constexpr const char* kEncoder = "encoder";

template <typename E, std::size_t N>
std::string_view lookup(const std::array<std::pair<E, std::string_view>, N>& table, E v) {
  for (const auto& [e, s] : table) {
    if (e == v) return s;
  }
  return "?";
}

template <typename E, std::size_t N>
E reverse_lookup(const std::array<std::pair<E, std::string_view>, N>& table, std::string_view s, const char* what) {
  for (const auto& [e, name] : table) {
    if (name == s) return e;
  }
  throw ValidationError(fmt::format("unknown {} '{}'", what, s));
}

constexpr std::array<std::pair<ModelKind, std::string_view>, 2> kModelKinds = {
    {{ModelKind::NoContext, "no_context"}, {ModelKind::Context, "context"}}};
constexpr std::array<std::pair<TargetKind, std::string_view>, 3> kTargetKinds = {
    {{TargetKind::CitationLogAvg, "citation_log_avg"},
     {TargetKind::ReviewScoreMean, "review_score_mean"},
     {TargetKind::ImpactMean, "impact_mean"}}};
constexpr std::array<std::pair<RepresentationKind, std::string_view>, 7> kRepresentationKinds = {
    {{RepresentationKind::TitleAbstract, "title_abstract"},
     {RepresentationKind::Hypothesis, "hypothesis"},
     {RepresentationKind::Introduction, "introduction"},
     {RepresentationKind::RelatedWork, "related_work"},
     {RepresentationKind::Methodology, "methodology"},
     {RepresentationKind::ExperimentsResults, "experiments_results"},
     {RepresentationKind::Conclusion, "conclusion"}}};
constexpr std::array<std::pair<ContextKind, std::string_view>, 3> kContextKinds = {
    {{ContextKind::None, "none"},
     {ContextKind::FullPaperSections, "full_paper_sections"},
     {ContextKind::ReferenceTitlesAbstracts, "reference_titles_abstracts"}}};
constexpr std::array<std::pair<Objective, std::string_view>, 2> kObjectives = {
    {{Objective::Pairwise, "pairwise"}, {Objective::Regression, "regression"}}};

void check_dims(const EmbeddedExample& ex, std::size_t dim) {
  if (ex.paper_embedding.size() != dim) {
    throw ValidationError(fmt::format("example '{}': embedding dimension {} != model dimension {}", ex.paper_id,
                                      ex.paper_embedding.size(), dim));
  }
  for (const auto& c : ex.context_embeddings) {
    if (c.size() != dim) {
      throw ValidationError(fmt::format("example '{}': context embedding dimension {} != model dimension {}",
                                        ex.paper_id, c.size(), dim));
    }
  }
}

}  // namespace

std::string_view to_string(ModelKind v) { return lookup(kModelKinds, v); }
std::string_view to_string(TargetKind v) { return lookup(kTargetKinds, v); }
std::string_view to_string(RepresentationKind v) { return lookup(kRepresentationKinds, v); }
std::string_view to_string(ContextKind v) { return lookup(kContextKinds, v); }
std::string_view to_string(Objective v) { return lookup(kObjectives, v); }
ModelKind model_kind_from(std::string_view s) { return reverse_lookup(kModelKinds, s, "model kind"); }
TargetKind target_kind_from(std::string_view s) { return reverse_lookup(kTargetKinds, s, "target kind"); }
RepresentationKind representation_kind_from(std::string_view s) {
  return reverse_lookup(kRepresentationKinds, s, "representation kind");
}
ContextKind context_kind_from(std::string_view s) { return reverse_lookup(kContextKinds, s, "context kind"); }
Objective objective_from(std::string_view s) { return reverse_lookup(kObjectives, s, "objective"); }

template <typename T>
void init_score_params(ParamSet<T>& params, const ScoreArchitecture& arch, std::uint64_t seed) {
  Rng rng(mix64(seed ^ 0x5eed5c0e));
  if (arch.kind == ModelKind::Context) init_encoder(params, kEncoder, arch.encoder_shape(0.0), rng);
  init_mlp(params, kMlp, arch.mlp_shape(), rng);
  params.rng = Rng(mix64(seed));
}

template <typename T>
Var score_graph(Tape<T>& tape, ParamSet<T>& params, const ScoreArchitecture& arch, double dropout,
                std::span<const EmbeddedExample* const> batch, bool training, Rng& rng) {
  const std::size_t d = arch.dim;
  if (batch.empty()) throw ValidationError("score_graph: empty batch");
  if (arch.kind == ModelKind::NoContext) {
    Tensor<T> x = Tensor<T>::matrix(batch.size(), d);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      check_dims(*batch[i], d);
      std::copy(batch[i]->paper_embedding.begin(), batch[i]->paper_embedding.end(), x.data() + i * d);
    }
    return mlp_forward(tape, params, kMlp, tape.constant(std::move(x)), dropout, training, rng);
  }

  std::vector<std::size_t> segments;
  std::vector<std::size_t> readout;
  std::size_t total = 0;
  for (const auto* ex : batch) {
    check_dims(*ex, d);
    segments.push_back(1 + ex->context_embeddings.size());
    readout.push_back(total);
    total += segments.back();
  }
  Tensor<T> x = Tensor<T>::matrix(total, d);
  std::size_t row = 0;
  for (const auto* ex : batch) {
    std::copy(ex->paper_embedding.begin(), ex->paper_embedding.end(), x.data() + row++ * d);
    for (const auto& c : ex->context_embeddings) std::copy(c.begin(), c.end(), x.data() + row++ * d);
  }
  Var h = encoder_forward(tape, params, kEncoder, tape.constant(std::move(x)), segments, arch.encoder_shape(dropout),
                          training, rng);
  h = ops::gather_rows(tape, h, std::move(readout));
  return mlp_forward(tape, params, kMlp, h, dropout, training, rng);
}

ScoreModel ScoreModel::create(const ScoreArchitecture& arch, std::uint64_t seed, std::string provider_id) {
  ScoreModel m;
  m.arch = arch;
  m.provider_id = std::move(provider_id);
  if (arch.kind == ModelKind::Context) m.context_kind = ContextKind::ReferenceTitlesAbstracts;
  init_score_params(m.params, arch, seed);
  return m;
}

void ScoreModel::validate() const {
  if (arch.kind == ModelKind::NoContext && context_kind != ContextKind::None) {
    throw ValidationError("no-context model must have context_kind none");
  }
  if (arch.kind == ModelKind::Context && context_kind == ContextKind::None) {
    throw ValidationError("context model needs a context kind");
  }
  if (dropout < 0.0 || dropout >= 1.0) throw ValidationError(fmt::format("dropout {} outside [0, 1)", dropout));
}

double ScoreModel::predict(const EmbeddedExample& example) const {
  return predict_batch(std::span<const EmbeddedExample>(&example, 1)).front();
}

std::vector<double> ScoreModel::predict_batch(std::span<const EmbeddedExample> examples, std::size_t batch_size) const {
  // Inference never touches gradient or optimizer slots, so sharing the
  // parameters through a non-const reference is safe here.
  auto& p = const_cast<ParamSet<float>&>(params);
  std::vector<double> out;
  out.reserve(examples.size());
  Rng unused(0);
  batch_size = std::max<std::size_t>(batch_size, 1);
  std::vector<const EmbeddedExample*> ptrs;
  for (std::size_t start = 0; start < examples.size(); start += batch_size) {
    const std::size_t end = std::min(examples.size(), start + batch_size);
    ptrs.clear();
    for (std::size_t i = start; i < end; ++i) ptrs.push_back(&examples[i]);
    Tape<float> tape;
    const Var s = score_graph(tape, p, arch, 0.0, ptrs, false, unused);
    for (float v : tape.value(s).values()) out.push_back(v);
  }
  return out;
}

nlohmann::json ScoreModel::metadata() const {
  return {{"format", "sdq-score-model"},
          {"kind", to_string(arch.kind)},
          {"dim", arch.dim},
          {"mlp_hidden", arch.mlp_hidden},
          {"heads", arch.heads},
          {"ff_hidden", arch.ff_hidden},
          {"dropout", dropout},
          {"provider_id", provider_id},
          {"target_kind", to_string(target_kind)},
          {"representation_kind", to_string(representation_kind)},
          {"context_kind", to_string(context_kind)},
          {"config_hash", config_hash}};
}

void ScoreModel::save(const std::filesystem::path& path) const {
  validate();
  save_checkpoint(path, params, metadata());
}

ScoreModel ScoreModel::load(const std::filesystem::path& path) {
  Checkpoint ck = load_checkpoint(path);
  const auto& m = ck.metadata;
  ScoreModel out;
  try {
    if (m.value("format", "") != "sdq-score-model") throw ParseError("not a score model checkpoint");
    out.arch.kind = model_kind_from(m.at("kind").get<std::string>());
    out.arch.dim = m.at("dim").get<std::size_t>();
    out.arch.mlp_hidden = m.at("mlp_hidden").get<std::size_t>();
    out.arch.heads = m.at("heads").get<std::size_t>();
    out.arch.ff_hidden = m.at("ff_hidden").get<std::size_t>();
    out.dropout = m.at("dropout").get<double>();
    out.provider_id = m.at("provider_id").get<std::string>();
    out.target_kind = target_kind_from(m.at("target_kind").get<std::string>());
    out.representation_kind = representation_kind_from(m.at("representation_kind").get<std::string>());
    out.context_kind = context_kind_from(m.at("context_kind").get<std::string>());
    out.config_hash = m.value("config_hash", "");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("{}: bad model metadata: {}", path.string(), e.what()));
  }
  // Shapes must match a freshly built model of the declared architecture.
  ParamSet<float> reference;
  init_score_params(reference, out.arch, 0);
  if (reference.parameters().size() != ck.params.parameters().size()) {
    throw ParseError(fmt::format("{}: parameter count does not match architecture", path.string()));
  }
  for (const auto& p : reference.parameters()) {
    if (!ck.params.contains(p.name) || !ck.params.get(p.name).value.same_shape(p.value)) {
      throw ParseError(fmt::format("{}: parameter '{}' missing or misshaped", path.string(), p.name));
    }
  }
  out.params = std::move(ck.params);
  out.validate();
  return out;
}

double pairwise_loss(double f1, double f2, int label) noexcept { return pairwise_logit_loss(f1 - f2, label); }

double regression_loss(double prediction, double target) noexcept { return std::abs(prediction - target); }

std::vector<IndexPair> make_pairs(std::span<const double> targets, std::uint64_t seed, std::size_t count) {
  if (targets.size() < 2) throw ValidationError("make_pairs: need at least 2 examples");
  if (std::all_of(targets.begin(), targets.end(), [&](double t) { return t == targets[0]; })) {
    throw ValidationError("make_pairs: all targets are equal, no pair can be formed");
  }
  Rng rng(mix64(seed ^ 0x9a125));
  const std::uint64_t n = targets.size();
  std::vector<IndexPair> out;
  out.reserve(count);
  while (out.size() < count) {
    std::size_t i = rng.below(n);
    std::size_t j = rng.below(n - 1);
    if (j >= i) ++j;
    if (targets[i] == targets[j]) continue;
    if (i > j) std::swap(i, j);
    out.push_back({i, j, targets[i] > targets[j] ? 1 : 0});
  }
  return out;
}

template void init_score_params<float>(ParamSet<float>&, const ScoreArchitecture&, std::uint64_t);
template void init_score_params<double>(ParamSet<double>&, const ScoreArchitecture&, std::uint64_t);
template Var score_graph<float>(Tape<float>&, ParamSet<float>&, const ScoreArchitecture&, double,
                                std::span<const EmbeddedExample* const>, bool, Rng&);
template Var score_graph<double>(Tape<double>&, ParamSet<double>&, const ScoreArchitecture&, double,
                                 std::span<const EmbeddedExample* const>, bool, Rng&);

}  // namespace sdq
