#include "run_config.hpp"

#include <algorithm>
#include <fmt/format.h>

#include "sdq/binary_io.hpp"

namespace sdq::cli {
namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<std::string_view> known, const char* where) {
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ParseError(fmt::format("config: unknown key '{}' in {}", key, where));
    }
  }
}

}  // namespace

ContextKind RunConfig::context_kind() const {
  if (context) return *context;
  return model_kind == ModelKind::Context ? ContextKind::ReferenceTitlesAbstracts : ContextKind::None;
}

void RunConfig::validate() const {
  if (seeds.empty()) throw ValidationError("config: seed list is empty");
  if (threads == 0) throw ValidationError("config: threads must be at least 1");
  if (provider.kind != "stub" && provider.kind != "remote") {
    throw ValidationError(fmt::format("config: unknown provider '{}' (stub or remote)", provider.kind));
  }
  if (provider.kind == "remote" && provider.endpoint.empty()) {
    throw ValidationError("config: remote provider needs an endpoint");
  }
  if (!snapshot_date.valid()) throw ValidationError("config: invalid snapshot_date");
  split.validate();
  training.validate();
  sections.validate();
  lda.validate();
  const bool no_context = model_kind == ModelKind::NoContext;
  if (no_context != (context_kind() == ContextKind::None)) {
    throw ValidationError("config: no_context models take context 'none' and context models need a context kind");
  }
}

RunConfig RunConfig::from_json(const nlohmann::json& j, const std::filesystem::path& base) {
  if (!j.is_object()) throw ParseError("config: expected a JSON object");
  reject_unknown(j,
                 {"corpus", "provider", "cache", "snapshot_date", "split", "model", "training", "grid_search",
                  "max_pairs", "seeds", "out", "threads", "mapping", "synonyms", "sections", "topics"},
                 "the top level");
  RunConfig c;
  try {
    if (j.contains("corpus")) c.corpus = resolve(base, j["corpus"].get<std::string>());
    if (j.contains("provider")) {
      const auto& p = j["provider"];
      reject_unknown(p, {"kind", "seed", "dimension", "token_budget", "endpoint"}, "provider");
      c.provider.kind = p.value("kind", c.provider.kind);
      c.provider.seed = p.value("seed", c.provider.seed);
      c.provider.dimension = p.value("dimension", c.provider.dimension);
      c.provider.token_budget = p.value("token_budget", c.provider.token_budget);
      c.provider.endpoint = p.value("endpoint", c.provider.endpoint);
    }
    if (j.contains("cache")) c.cache = resolve(base, j["cache"].get<std::string>());
    if (j.contains("snapshot_date")) {
      const auto s = j["snapshot_date"].get<std::string>();
      const auto ym = YearMonth::parse(s);
      if (!ym) throw ParseError(fmt::format("config: snapshot_date '{}' is not YYYY-MM", s));
      c.snapshot_date = *ym;
    }
    if (j.contains("split")) {
      const auto& s = j["split"];
      reject_unknown(s, {"train", "validation", "test"}, "split");
      c.split.train_fraction = s.value("train", c.split.train_fraction);
      c.split.validation_fraction = s.value("validation", c.split.validation_fraction);
      c.split.test_fraction = s.value("test", c.split.test_fraction);
    }
    if (j.contains("model")) {
      const auto& m = j["model"];
      reject_unknown(m, {"kind", "target", "representation", "context", "mlp_hidden", "heads", "ff_hidden"}, "model");
      if (m.contains("kind")) c.model_kind = model_kind_from(m["kind"].get<std::string>());
      if (m.contains("target")) c.target = target_kind_from(m["target"].get<std::string>());
      if (m.contains("representation")) {
        c.representation = representation_kind_from(m["representation"].get<std::string>());
      }
      if (m.contains("context")) c.context = context_kind_from(m["context"].get<std::string>());
      c.architecture.mlp_hidden = m.value("mlp_hidden", c.architecture.mlp_hidden);
      c.architecture.heads = m.value("heads", c.architecture.heads);
      c.architecture.ff_hidden = m.value("ff_hidden", c.architecture.ff_hidden);
    }
    c.training = TrainConfig::defaults_for(c.model_kind);
    if (j.contains("training")) c.training = TrainConfig::from_json(j["training"], c.training);
    c.grid_search = j.value("grid_search", c.grid_search);
    c.max_pairs = j.value("max_pairs", c.max_pairs);
    if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    if (j.contains("out")) c.out = resolve(base, j["out"].get<std::string>());
    c.threads = j.value("threads", c.threads);
    if (j.contains("mapping")) c.mapping = resolve(base, j["mapping"].get<std::string>());
    if (j.contains("synonyms")) c.synonyms = resolve(base, j["synonyms"].get<std::string>());
    if (j.contains("sections")) c.sections = SectionClassifierConfig::from_json(j["sections"], c.sections);
    if (j.contains("topics")) {
      const auto& t = j["topics"];
      reject_unknown(t, {"topics", "iterations", "alpha", "beta", "seed", "phrase_threshold", "top_topics", "min_size"},
                     "topics");
      c.lda.topics = t.value("topics", c.lda.topics);
      c.lda.iterations = t.value("iterations", c.lda.iterations);
      if (t.contains("alpha")) c.lda.alpha = t["alpha"].get<double>();
      c.lda.beta = t.value("beta", c.lda.beta);
      c.lda.seed = t.value("seed", c.lda.seed);
      c.phrase_threshold = t.value("phrase_threshold", c.phrase_threshold);
      c.top_topics = t.value("top_topics", c.top_topics);
      c.min_topic_size = t.value("min_size", c.min_topic_size);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("config: {}", e.what()));
  }
  c.architecture.kind = c.model_kind;
  c.architecture.dim = c.provider.dimension;
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
  }
  return from_json(j, path.parent_path());
}

}  // namespace sdq::cli
