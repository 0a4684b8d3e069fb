#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdq/corpus.hpp"
#include "sdq/harmonize.hpp"
#include "sdq/scoremodel.hpp"
#include "sdq/sections.hpp"
#include "sdq/topics.hpp"

namespace sdq::cli {

struct ProviderConfig {
  std::string kind = "stub";  // stub | remote
  std::uint64_t seed = 0;
  std::size_t dimension = kEmbeddingDim;
  std::size_t token_budget = 512;
  std::string endpoint;
};

/// Everything a run needs, loaded from one JSON file. Relative paths are
/// resolved against the directory holding the config file; command-line
/// flags override individual fields afterwards.
struct RunConfig {
  std::filesystem::path corpus;
  ProviderConfig provider;
  std::optional<std::filesystem::path> cache;  // defaults to <out>/embeddings.sdqe
  bool use_cache = true;
  bool network = true;
  YearMonth snapshot_date{2024, 1};
  SplitSpec split;

  ModelKind model_kind = ModelKind::NoContext;
  TargetKind target = TargetKind::CitationLogAvg;
  RepresentationKind representation = RepresentationKind::TitleAbstract;
  std::optional<ContextKind> context;  // defaults by model kind
  ScoreArchitecture architecture;
  TrainConfig training;
  bool grid_search = false;
  std::size_t max_pairs = 100000;

  std::vector<std::uint64_t> seeds{0};
  std::filesystem::path out = "sdq-out";
  std::size_t threads = 1;

  std::optional<std::filesystem::path> mapping;
  std::optional<std::filesystem::path> synonyms;
  SectionClassifierConfig sections;
  LdaConfig lda;
  std::size_t phrase_threshold = 20;
  std::size_t top_topics = 5;
  std::size_t min_topic_size = 200;

  ContextKind context_kind() const;
  std::filesystem::path cache_path() const { return cache.value_or(out / "embeddings.sdqe"); }
  void validate() const;

  static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
  static RunConfig load(const std::filesystem::path& path);
};

}  // namespace sdq::cli
