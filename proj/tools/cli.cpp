#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <set>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <fmt/format.h>

#include "run_config.hpp"
#include "sdq/binary_io.hpp"
#include "sdq/dataset.hpp"
#include "sdq/embed.hpp"
#include "sdq/harmonize.hpp"
#include "sdq/metrics.hpp"
#include "sdq/scoremodel.hpp"
#include "sdq/sections.hpp"
#include "sdq/topics.hpp"

namespace sdq::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::string provider;
  std::string endpoint;
  std::string out;
  bool no_cache = false;
  bool no_network = false;
};

RunConfig resolve_config(const Globals& g) {
  RunConfig c = g.config.empty() ? RunConfig{} : RunConfig::load(g.config);
  if (g.seed) c.seeds = {*g.seed};
  if (g.threads) c.threads = *g.threads;
  if (!g.provider.empty()) c.provider.kind = g.provider;
  if (!g.endpoint.empty()) c.provider.endpoint = g.endpoint;
  if (!g.out.empty()) c.out = g.out;
  if (g.no_cache) c.use_cache = false;
  if (g.no_network) c.network = false;
  c.validate();
  Eigen::setNbThreads(static_cast<int>(c.threads));
  return c;
}

void write_json(const fs::path& path, const json& j) {
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  io::write_file_atomic(path, j.dump(2) + "\n");
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  io::write_file_atomic(path, text);
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string fmt_opt(const std::optional<double>& v, int precision = 3) {
  return v ? fmt::format("{:.{}f}", *v, precision) : std::string("-");
}

// ---------------------------------------------------------------------------
// Embedding providers

// Stands in for a remote provider when the network is off: only cached texts
// can be served.
class OfflineProvider final : public EmbeddingProvider {
 public:
  OfflineProvider(std::string identity, std::size_t dim, std::size_t budget, std::string endpoint)
      : identity_(std::move(identity)), dim_(dim), budget_(budget), endpoint_(std::move(endpoint)) {}
  std::size_t dimension() const override { return dim_; }
  std::size_t token_budget() const override { return budget_; }
  std::string identity() const override { return identity_; }
  EmbeddingVector embed_chunk(std::string_view) const override {
    throw ProviderError(fmt::format("remote provider {} is unreachable with --no-network and a text is missing "
                                    "from the embedding cache",
                                    endpoint_));
  }

 private:
  std::string identity_;
  std::size_t dim_;
  std::size_t budget_;
  std::string endpoint_;
};

struct ProviderStack {
  std::unique_ptr<EmbeddingProvider> base;
  std::unique_ptr<EmbeddingCache> cache;
  std::unique_ptr<CachedProvider> cached;

  const EmbeddingProvider& get() const { return cached ? static_cast<const EmbeddingProvider&>(*cached) : *base; }
};

ProviderStack make_provider(const RunConfig& c) {
  ProviderStack s;
  const fs::path cache_path = c.cache_path();
  const fs::path sidecar = fs::path(cache_path.string() + ".provider.json");
  if (c.provider.kind == "stub") {
    s.base = std::make_unique<DeterministicEmbedder>(c.provider.seed, c.provider.dimension, c.provider.token_budget);
  } else if (!c.network) {
    if (!c.use_cache || !fs::exists(cache_path) || !fs::exists(sidecar)) {
      throw NetworkError(fmt::format("remote provider {} needs the network (--no-network) and there is no embedding "
                                     "cache at {}",
                                     c.provider.endpoint, cache_path.string()));
    }
    const auto meta = json::parse(io::read_file(sidecar));
    s.base = std::make_unique<OfflineProvider>(meta.at("identity").get<std::string>(),
                                               meta.at("dimension").get<std::size_t>(),
                                               meta.at("token_budget").get<std::size_t>(), c.provider.endpoint);
  } else {
    s.base = std::make_unique<RemoteEmbedder>(c.provider.endpoint);
  }
  if (c.use_cache) {
    if (cache_path.has_parent_path()) fs::create_directories(cache_path.parent_path());
    s.cache = std::make_unique<EmbeddingCache>(cache_path, s.base->dimension());
    s.cached = std::make_unique<CachedProvider>(*s.base, *s.cache);
    if (c.provider.kind == "remote" && c.network) {
      write_json(sidecar, {{"identity", s.base->identity()},
                           {"dimension", s.base->dimension()},
                           {"token_budget", s.base->token_budget()}});
    }
  }
  return s;
}

Corpus load_config_corpus(const RunConfig& c) {
  if (c.corpus.empty()) throw ValidationError("no corpus configured (set \"corpus\" in the config)");
  if (!fs::exists(c.corpus)) throw IoError(fmt::format("corpus {} does not exist", c.corpus.string()));
  return load_corpus(c.corpus);
}

struct SplitSets {
  std::vector<EmbeddedExample> train, validation, test;
};

SplitSets split_examples(const std::vector<EmbeddedExample>& examples, const SplitSpec& spec) {
  std::vector<std::pair<std::string, YearMonth>> items;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    items.emplace_back(examples[i].paper_id, examples[i].publication_date);
    index[examples[i].paper_id] = i;
  }
  const Split split = temporal_split(std::move(items), spec);
  SplitSets s;
  for (const auto& id : split.train) s.train.push_back(examples[index.at(id)]);
  for (const auto& id : split.validation) s.validation.push_back(examples[index.at(id)]);
  for (const auto& id : split.test) s.test.push_back(examples[index.at(id)]);
  return s;
}

json excluded_json(const std::map<std::string, std::size_t>& excluded) {
  json j = json::object();
  for (const auto& [k, v] : excluded) j[k] = v;
  return j;
}

json spec_json(const ScoreModel& m) {
  return {{"kind", to_string(m.arch.kind)},
          {"target", to_string(m.target_kind)},
          {"representation", to_string(m.representation_kind)},
          {"context", to_string(m.context_kind)}};
}

// ---------------------------------------------------------------------------
// ingest

struct IngestOptions {
  std::string export_dir;
  std::string corpus_out;
  bool skip_bad = false;
  bool fetch_citations = false;
};

int cmd_ingest(const RunConfig& c, const IngestOptions& o, std::ostream& out, std::ostream& err) {
  const fs::path dir(o.export_dir);
  if (!fs::is_directory(dir)) throw IoError(fmt::format("export directory {} does not exist", dir.string()));
  HarmonizationConfig harmonization;
  if (c.mapping) {
    harmonization = HarmonizationConfig::load(*c.mapping);
  } else {
    harmonization.fallback = VenueConfig{default_field_mapping(), {}};
  }

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<PaperRecord> records;
  std::set<std::string> ids;
  std::map<std::string, std::pair<std::size_t, std::size_t>> per_venue;  // papers, reviews
  std::map<std::string, std::size_t> unmapped;
  json skipped = json::array();

  for (const auto& file : files) {
    std::ifstream in(file);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const std::string where = fmt::format("{}:{}", file.filename().string(), line_no);
      try {
        json j = json::parse(line);
        if (!j.is_object()) throw ParseError("record is not a JSON object");
        json raw_reviews = j.contains("reviews") ? j["reviews"] : json::array();
        j["reviews"] = json::array();
        PaperRecord p = paper_from_json(j);
        const VenueConfig& venue = harmonization.for_venue(p.venue);
        std::vector<std::string> record_unmapped;
        for (const auto& r : raw_reviews) {
          if (!r.is_object()) throw ParseError("review is not a JSON object");
          std::map<std::string, std::string> fields;
          for (const auto& [k, v] : r.items()) {
            if (v.is_null()) continue;
            fields[k] = v.is_string() ? v.get<std::string>() : v.dump();
          }
          auto h = harmonize_review(fields, venue.mapping, venue.scales);
          record_unmapped.insert(record_unmapped.end(), h.unmapped_fields.begin(), h.unmapped_fields.end());
          p.reviews.push_back(std::move(h.review));
        }
        const auto violations = validate_record(p);
        if (!violations.empty()) {
          throw ValidationError(fmt::format("{}: {}", violations.front().path, violations.front().message));
        }
        if (!ids.insert(p.id).second) throw ValidationError(fmt::format("duplicate paper id '{}'", p.id));
        for (const auto& f : record_unmapped) ++unmapped[f];
        auto& counts = per_venue[p.venue];
        ++counts.first;
        counts.second += p.reviews.size();
        records.push_back(std::move(p));
      } catch (const std::exception& e) {
        if (!o.skip_bad) throw ParseError(fmt::format("{}: {}", where, e.what()));
        skipped.push_back({{"location", where}, {"error", e.what()}});
      }
    }
  }
  if (records.empty()) err << fmt::format("warning: no records found in {}\n", dir.string());

  if (o.fetch_citations) {
    if (!c.network) throw NetworkError("--fetch-citations needs the network (--no-network given)");
    CitationClient client(CitationClientConfig::from_env());
    std::vector<std::string> wanted;
    for (const auto& p : records) {
      if (p.decision != Decision::Rejected && !p.citation_count) wanted.push_back(p.id);
    }
    const auto counts = client.fetch(wanted);
    for (auto& p : records) {
      if (auto it = counts.find(p.id); it != counts.end()) {
        p.citation_count = it->second.citations;
        p.influential_citation_count = it->second.influential_citations;
      }
    }
  }

  const Corpus corpus(std::move(records));
  const fs::path corpus_out = o.corpus_out.empty() ? c.out / "corpus.jsonl" : fs::path(o.corpus_out);
  if (corpus_out.has_parent_path()) fs::create_directories(corpus_out.parent_path());
  save_corpus(corpus, corpus_out);

  std::size_t total_reviews = 0;
  json venues = json::object();
  std::vector<std::vector<std::string>> rows = {{"venue", "papers", "reviews"}};
  for (const auto& [v, counts] : per_venue) {
    venues[v] = {{"papers", counts.first}, {"reviews", counts.second}};
    rows.push_back({v, std::to_string(counts.first), std::to_string(counts.second)});
    total_reviews += counts.second;
  }
  rows.push_back({"total", std::to_string(corpus.size()), std::to_string(total_reviews)});
  json unmapped_j = json::object();
  for (const auto& [f, n] : unmapped) unmapped_j[f] = n;
  const json summary = {{"files", files.size()},     {"papers", corpus.size()}, {"reviews", total_reviews},
                        {"venues", venues},          {"unmapped_fields", unmapped_j},
                        {"skipped", skipped}};
  write_json(c.out / "ingest_summary.json", summary);

  std::string text = format_table(rows);
  if (!unmapped.empty()) {
    std::vector<std::vector<std::string>> urows = {{"unmapped field", "occurrences"}};
    for (const auto& [f, n] : unmapped) urows.push_back({f, std::to_string(n)});
    text += "\n" + format_table(urows);
  }
  if (!skipped.empty()) text += fmt::format("\nskipped {} malformed record(s)\n", skipped.size());
  write_text(c.out / "ingest_summary.txt", text);
  out << text;
  return 0;
}

// ---------------------------------------------------------------------------
// embed

int cmd_embed(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const Corpus corpus = load_config_corpus(c);
  const auto provider = make_provider(c);
  const std::size_t before = provider.cache ? provider.cache->size() : 0;
  const ExampleSpec spec{c.target, c.representation, c.context_kind(), c.snapshot_date};
  const auto build = build_examples(corpus, provider.get(), spec, false);

  std::uint64_t digest = 0xcbf29ce484222325ULL;
  std::size_t vectors = 0;
  auto fold = [&](const EmbeddingVector& v) {
    ++vectors;
    for (float f : v) {
      unsigned char b[4];
      io::encode_f32(f, b);
      for (unsigned char x : b) {
        digest ^= x;
        digest *= 0x100000001b3ULL;
      }
    }
  };
  for (const auto& ex : build.examples) {
    fold(ex.paper_embedding);
    for (const auto& ctx : ex.context_embeddings) fold(ctx);
  }
  const json report = {{"provider", provider.get().identity()},
                       {"representation", to_string(c.representation)},
                       {"context", to_string(c.context_kind())},
                       {"papers", build.examples.size()},
                       {"vectors", vectors},
                       {"excluded", excluded_json(build.excluded)},
                       {"digest", fmt::format("{:016x}", digest)}};
  write_json(c.out / "embed_report.json", report);
  if (provider.cache) {
    err << fmt::format("embedding cache {}: {} entries ({} new)\n", provider.cache->path().string(),
                       provider.cache->size(), provider.cache->size() - before);
    for (const auto& p : provider.cache->problems()) err << "warning: " << p << "\n";
  }
  out << fmt::format("embedded {} papers ({} vectors) with {}\n", build.examples.size(), vectors,
                     provider.get().identity());
  return 0;
}

// ---------------------------------------------------------------------------
// train

int cmd_train(const RunConfig& c, std::ostream& out, std::ostream&) {
  const Corpus corpus = load_config_corpus(c);
  const auto provider = make_provider(c);
  ScoreArchitecture arch = c.architecture;
  arch.kind = c.model_kind;
  arch.dim = provider.get().dimension();
  const ExampleSpec spec{c.target, c.representation, c.context_kind(), c.snapshot_date};
  const auto build = build_examples(corpus, provider.get(), spec);
  const auto sets = split_examples(build.examples, c.split);
  if (sets.train.empty()) throw ValidationError("training split is empty");

  json seeds = json::array();
  std::vector<double> acc, rho, l1, pear;
  std::vector<std::vector<std::string>> rows = {{"seed", "best epoch", "lr", "dropout", "accuracy", "rho_s", "L1", "pearson"}};
  for (const auto seed : c.seeds) {
    TrainConfig tc = c.training;
    tc.seed = seed;
    ScoreModel initial = ScoreModel::create(arch, seed, provider.get().identity());
    initial.target_kind = c.target;
    initial.representation_kind = c.representation;
    initial.context_kind = c.context_kind();
    TrainResult result;
    json grid = nullptr;
    double lr = tc.learning_rate, dropout = tc.dropout;
    if (c.grid_search) {
      GridResult g = grid_search(initial, sets.train, sets.validation, tc);
      result = std::move(g.best);
      lr = g.best_learning_rate;
      dropout = g.best_dropout;
      grid = json::array();
      for (const auto& cell : g.cells) {
        grid.push_back({{"learning_rate", cell.learning_rate},
                        {"dropout", cell.dropout},
                        {"val_loss", opt_json(cell.val_loss)},
                        {"best_epoch", cell.best_epoch},
                        {"error", cell.error ? json(*cell.error) : json(nullptr)}});
      }
    } else {
      result = train(initial, sets.train, sets.validation, tc);
    }
    const fs::path model_path = c.out / fmt::format("model_seed{}.sdqc", seed);
    fs::create_directories(c.out);
    result.best.save(model_path);
    write_history_jsonl(c.out / fmt::format("history_seed{}.jsonl", seed), result.history);

    std::optional<MetricReport> test;
    if (sets.test.size() >= 2) test = evaluate(result.best, sets.test, seed, c.max_pairs);
    if (test) {
      acc.push_back(*test->pairwise_accuracy);
      if (test->spearman) rho.push_back(*test->spearman);
      if (test->pearson) pear.push_back(*test->pearson);
      l1.push_back(*test->l1);
    }
    seeds.push_back({{"seed", seed},
                     {"model", model_path.filename().string()},
                     {"best_epoch", result.best_epoch},
                     {"best_val_loss", result.best_val_loss},
                     {"learning_rate", lr},
                     {"dropout", dropout},
                     {"grid", grid},
                     {"test", test ? test->to_json() : json(nullptr)}});
    rows.push_back({std::to_string(seed), std::to_string(result.best_epoch), fmt::format("{:g}", lr),
                    fmt::format("{:g}", dropout), test ? fmt_opt(test->pairwise_accuracy) : "-",
                    test ? fmt_opt(test->spearman) : "-", test ? fmt_opt(test->l1) : "-",
                    test ? fmt_opt(test->pearson) : "-"});
  }
  auto summary_cell = [](const std::vector<double>& v) {
    return v.empty() ? std::string("-") : format_mean_std(mean_std(v));
  };
  auto summary_json = [](const std::vector<double>& v) {
    if (v.empty()) return json(nullptr);
    const auto m = mean_std(v);
    return json{{"mean", m.mean}, {"std", m.stddev}, {"n", m.n}};
  };
  rows.push_back({"mean (sd)", "", "", "", summary_cell(acc), summary_cell(rho), summary_cell(l1), summary_cell(pear)});

  ScoreModel probe;
  probe.arch = arch;
  probe.target_kind = c.target;
  probe.representation_kind = c.representation;
  probe.context_kind = c.context_kind();
  const json report = {{"model", spec_json(probe)},
                       {"provider", provider.get().identity()},
                       {"training", c.training.to_json()},
                       {"grid_search", c.grid_search},
                       {"examples", {{"train", sets.train.size()},
                                     {"validation", sets.validation.size()},
                                     {"test", sets.test.size()}}},
                       {"excluded", excluded_json(build.excluded)},
                       {"seeds", seeds},
                       {"summary",
                        {{"pairwise_accuracy", summary_json(acc)},
                         {"spearman", summary_json(rho)},
                         {"l1", summary_json(l1)},
                         {"pearson", summary_json(pear)}}}};
  write_json(c.out / "train_summary.json", report);
  const std::string text =
      fmt::format("{} / {} / {} / context {}\ntrain {}  validation {}  test {}\n\n", to_string(arch.kind),
                  to_string(c.target), to_string(c.representation), to_string(c.context_kind()), sets.train.size(),
                  sets.validation.size(), sets.test.size()) +
      format_table(rows);
  write_text(c.out / "train_summary.txt", text);
  out << text;
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate

std::vector<fs::path> model_paths(const RunConfig& c, const std::vector<std::string>& given) {
  std::vector<fs::path> paths;
  if (!given.empty()) {
    for (const auto& p : given) paths.emplace_back(p);
  } else {
    for (auto s : c.seeds) paths.push_back(c.out / fmt::format("model_seed{}.sdqc", s));
  }
  for (const auto& p : paths) {
    if (!fs::exists(p)) throw IoError(fmt::format("model checkpoint {} does not exist", p.string()));
  }
  return paths;
}

void check_provider(const ScoreModel& model, const EmbeddingProvider& provider, const fs::path& path) {
  if (!model.provider_id.empty() && model.provider_id != provider.identity()) {
    throw ValidationError(fmt::format("{} was trained with embeddings from '{}' but the configured provider is '{}'",
                                      path.string(), model.provider_id, provider.identity()));
  }
}

int cmd_evaluate(const RunConfig& c, const std::vector<std::string>& models, const std::string& which,
                 std::ostream& out, std::ostream&) {
  const auto paths = model_paths(c, models);
  const Corpus corpus = load_config_corpus(c);
  const auto provider = make_provider(c);
  json results = json::array();
  std::vector<std::vector<std::string>> rows = {{"model", "split", "n", "pairs", "accuracy", "rho_s", "L1", "pearson"}};
  std::map<std::string, ExampleBuild> builds;
  for (const auto& path : paths) {
    const ScoreModel model = ScoreModel::load(path);
    check_provider(model, provider.get(), path);
    const ExampleSpec spec{model.target_kind, model.representation_kind, model.context_kind, c.snapshot_date};
    const std::string key = spec_json(model).dump();
    if (!builds.count(key)) builds.emplace(key, build_examples(corpus, provider.get(), spec));
    const auto& build = builds.at(key);
    std::vector<EmbeddedExample> chosen;
    if (which == "all") {
      chosen = build.examples;
    } else {
      auto sets = split_examples(build.examples, c.split);
      chosen = which == "train" ? sets.train : which == "validation" ? sets.validation : sets.test;
    }
    if (chosen.size() < 2) throw ValidationError(fmt::format("the {} split has fewer than 2 examples", which));
    const MetricReport r = evaluate(model, chosen, c.seeds.front(), c.max_pairs);
    results.push_back({{"model", path.filename().string()}, {"spec", spec_json(model)}, {"split", which},
                       {"metrics", r.to_json()}});
    rows.push_back({path.filename().string(), which, std::to_string(r.n_items), std::to_string(r.n_pairs),
                    fmt_opt(r.pairwise_accuracy), fmt_opt(r.spearman), fmt_opt(r.l1), fmt_opt(r.pearson)});
  }
  write_json(c.out / "evaluate.json", {{"provider", provider.get().identity()}, {"results", results}});
  const std::string text = format_table(rows);
  write_text(c.out / "evaluate.txt", text);
  out << text;
  return 0;
}

// ---------------------------------------------------------------------------
// rank

Corpus load_rank_input(const fs::path& input) {
  if (fs::is_directory(input)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(input)) {
      if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<PaperRecord> records;
    for (const auto& f : files) {
      for (const auto& r : load_corpus(f)) records.push_back(r);
    }
    return Corpus(std::move(records));
  }
  if (!fs::exists(input)) throw IoError(fmt::format("rank input {} does not exist", input.string()));
  return load_corpus(input);
}

int cmd_rank(const RunConfig& c, const std::string& model_arg, const std::string& input_arg, bool swiss,
             std::size_t rounds, std::ostream& out, std::ostream&) {
  const auto paths = model_paths(c, model_arg.empty() ? std::vector<std::string>{} : std::vector{model_arg});
  const fs::path model_path = paths.front();
  const ScoreModel model = ScoreModel::load(model_path);
  const fs::path input = input_arg.empty() ? c.corpus : fs::path(input_arg);
  if (input.empty()) throw ValidationError("rank needs --input or a configured corpus");
  const Corpus corpus = load_rank_input(input);
  const auto provider = make_provider(c);
  check_provider(model, provider.get(), model_path);
  const ExampleSpec spec{model.target_kind, model.representation_kind, model.context_kind, c.snapshot_date};
  const auto build = build_examples(corpus, provider.get(), spec, false);
  if (build.examples.empty()) throw ValidationError("nothing to rank");
  const auto scores = model.predict_batch(build.examples);
  std::vector<RankItem> items;
  for (std::size_t i = 0; i < scores.size(); ++i) items.push_back({build.examples[i].paper_id, scores[i]});
  const auto beats = scalar_comparator(items);
  const Ranking ranking = swiss ? swiss_rank(items, beats, rounds) : round_robin_rank(items, beats);
  json report = ranking_to_json(items, ranking);
  report["system"] = swiss ? "swiss" : "round_robin";
  if (swiss) report["rounds"] = rounds;
  report["model"] = model_path.filename().string();
  write_json(c.out / "rank.json", report);
  const std::string text = fmt::format("{} ranking of {} items\n\n", swiss ? "swiss" : "round-robin", items.size()) +
                           ranking_to_text(items, ranking);
  write_text(c.out / "rank.txt", text);
  out << text;
  return 0;
}

// ---------------------------------------------------------------------------
// analyze

int cmd_analyze(const RunConfig& c, std::ostream& out, std::ostream&) {
  const Corpus corpus = load_config_corpus(c);
  const DimensionMatrix dims = review_dimension_correlations(corpus);
  write_text(c.out / "dimensions.csv", dims.to_csv());
  write_text(c.out / "dimensions.svg", dims.to_svg());

  json consistency = {{"attribute", "score"}, {"per_seed", json::array()}};
  std::vector<double> hc;
  std::string hc_error;
  for (auto seed : c.seeds) {
    try {
      const auto r = human_consistency(corpus, ReviewAttribute::Score, seed);
      hc.push_back(r.rho);
      consistency["per_seed"].push_back({{"seed", seed}, {"pearson", r.rho}, {"n", r.n}});
    } catch (const ValidationError& e) {
      hc_error = e.what();
      break;
    }
  }
  if (!hc.empty()) {
    const auto m = mean_std(hc);
    consistency["mean"] = m.mean;
    consistency["std"] = m.stddev;
  } else {
    consistency["error"] = hc_error;
  }

  std::set<std::pair<std::string, int>> groups;
  for (const auto& p : corpus) groups.emplace(p.venue, p.publication_date.year);
  json citation = json::array();
  std::vector<std::vector<std::string>> rows = {{"venue", "year", "n", "pearson"}};
  auto add_row = [&](const std::string& venue, std::optional<int> year, const CorpusFilter& f) {
    try {
      const auto r = citation_review_correlation(corpus, f, c.snapshot_date);
      citation.push_back({{"venue", venue}, {"year", year ? json(*year) : json(nullptr)}, {"n", r.n}, {"pearson", r.rho}});
      rows.push_back({venue, year ? std::to_string(*year) : "all", std::to_string(r.n), fmt::format("{:.3f}", r.rho)});
    } catch (const ValidationError&) {
      // groups with fewer than two usable papers are left out
    }
  };
  for (const auto& [venue, year] : groups) {
    CorpusFilter f;
    f.venue = venue;
    f.year = year;
    add_row(venue, year, f);
  }
  add_row("all", std::nullopt, CorpusFilter{});

  const json report = {{"dimensions", dims.to_json()},
                       {"human_consistency", consistency},
                       {"citation_review", citation},
                       {"snapshot_date", c.snapshot_date.str()}};
  write_json(c.out / "analyze.json", report);

  std::vector<std::vector<std::string>> drows;
  drows.push_back({""});
  for (auto a : kReviewAttributes) drows[0].push_back(std::string(attribute_key(a)));
  for (std::size_t a = 0; a < 7; ++a) {
    std::vector<std::string> row = {std::string(attribute_key(kReviewAttributes[a]))};
    for (std::size_t b = 0; b < 7; ++b) row.push_back(fmt_opt(dims.rho[a][b], 2));
    drows.push_back(row);
  }
  std::string text = "review dimension correlations (pearson)\n" + format_table(drows);
  text += "\nhuman consistency (score): ";
  text += hc.empty() ? "n/a (" + hc_error + ")\n" : format_mean_std(mean_std(hc)) + "\n";
  text += "\ncitation vs review score\n" + format_table(rows);
  write_text(c.out / "analyze.txt", text);
  out << text;
  return 0;
}

// ---------------------------------------------------------------------------
// sections

SynonymTable load_synonyms(const RunConfig& c, const std::string& flag) {
  if (!flag.empty()) return SynonymTable::load(flag);
  if (c.synonyms) return SynonymTable::load(*c.synonyms);
  return SynonymTable::defaults();
}

json dataset_stats(const SectionDataset& d) {
  json per_label = json::object();
  for (auto t : kSectionTypes) per_label[std::string(section_key(t))] = d.per_label[static_cast<std::size_t>(t)];
  json skipped = json::object();
  for (const auto& [h, n] : d.skipped_headings) skipped[h] = n;
  return {{"examples", d.examples.size()}, {"matched", d.matched}, {"skipped", d.skipped},
          {"per_label", per_label},        {"skipped_headings", skipped}};
}

int cmd_sections_dataset(const RunConfig& c, const std::string& raw, const std::string& synonyms, std::ostream& out) {
  const auto papers = load_raw_papers(raw);
  const auto dataset = build_section_dataset(papers, load_synonyms(c, synonyms));
  std::string jsonl;
  for (const auto& ex : dataset.examples) {
    jsonl += json{{"paper_id", ex.source_paper_id}, {"label", section_key(ex.label)}, {"sentences", ex.sentences}}.dump();
    jsonl += '\n';
  }
  write_text(c.out / "section_dataset.jsonl", jsonl);
  const json stats = dataset_stats(dataset);
  write_json(c.out / "section_dataset.json", stats);
  out << fmt::format("{} examples from {} papers ({} sections skipped)\n", dataset.examples.size(), papers.size(),
                     dataset.skipped);
  return 0;
}

int cmd_sections_train(const RunConfig& c, const std::string& raw, const std::string& synonyms, std::ostream& out) {
  const auto papers = load_raw_papers(raw);
  const auto dataset = build_section_dataset(papers, load_synonyms(c, synonyms));
  const auto provider = make_provider(c);
  SectionClassifierConfig cfg = c.sections;
  cfg.seed = c.seeds.front();
  const auto result = train_section_classifier(dataset, provider.get(), cfg);
  fs::create_directories(c.out);
  result.classifier.save(c.out / "section_classifier.sdqc");
  json report = result.report();
  report["dataset"] = dataset_stats(dataset);
  write_json(c.out / "sections_report.json", report);
  out << fmt::format("section classifier: train {} / validation {} / test {}, best epoch {}, test accuracy {:.4f}\n",
                     result.split_counts[0], result.split_counts[1], result.split_counts[2], result.best_epoch,
                     result.test_accuracy);
  return 0;
}

int cmd_sections_classify(const RunConfig& c, const std::string& model_arg, const std::string& text_arg,
                          const std::string& input, std::ostream& out) {
  const fs::path model_path = model_arg.empty() ? c.out / "section_classifier.sdqc" : fs::path(model_arg);
  if (!fs::exists(model_path)) throw IoError(fmt::format("classifier {} does not exist", model_path.string()));
  const auto classifier = SectionClassifier::load(model_path);
  std::string text = text_arg;
  if (!input.empty()) text = io::read_file(input);
  const auto provider = make_provider(c);
  if (!classifier.provider_id.empty() && classifier.provider_id != provider.get().identity()) {
    throw ValidationError(fmt::format("classifier was trained with '{}' but the configured provider is '{}'",
                                      classifier.provider_id, provider.get().identity()));
  }
  const auto pred = classify_section(text, classifier, provider.get());
  json probs = json::object();
  std::string line = fmt::format("{}", section_key(pred.label));
  for (auto t : kSectionTypes) {
    const double p = pred.probabilities[static_cast<std::size_t>(t)];
    probs[std::string(section_key(t))] = p;
    line += fmt::format("  {}={:.4f}", section_key(t), p);
  }
  write_json(c.out / "classify.json", {{"label", section_key(pred.label)}, {"probabilities", probs}});
  out << line << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// topics

int cmd_topics_fit(const RunConfig& c, std::ostream& out) {
  const Corpus corpus = load_config_corpus(c);
  std::vector<std::pair<std::string, std::string>> texts;
  for (const auto& p : corpus) texts.emplace_back(p.title, p.abstract);
  const auto docs = preprocess_corpus(texts, c.phrase_threshold);
  LdaConfig lda = c.lda;
  const LdaModel model = fit_lda(docs, lda);
  fs::create_directories(c.out);
  model.save(c.out / "lda.sdql");

  std::vector<TopicLabel> labels;
  std::vector<std::size_t> counts(model.topics, 0);
  std::size_t unlabeled = 0;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    TopicLabel l;
    l.paper_id = corpus[i].id;
    if (auto post = dominant_topic(model, docs[i])) {
      l.topic = post->topic;
      l.probability = post->theta[post->topic];
      ++counts[post->topic];
    } else {
      ++unlabeled;
    }
    labels.push_back(std::move(l));
  }
  write_text(c.out / "topic_labels.csv", labels_to_csv(labels));

  json topics = json::array();
  std::vector<std::vector<std::string>> rows = {{"topic", "papers", "top words"}};
  for (std::size_t k = 0; k < model.topics; ++k) {
    const auto words = top_words(model, k, 10);
    topics.push_back({{"topic", k}, {"papers", counts[k]}, {"top_words", words}});
    std::string joined;
    for (const auto& w : words) joined += (joined.empty() ? "" : ", ") + w;
    rows.push_back({std::to_string(k), std::to_string(counts[k]), joined});
  }
  const json report = {{"topics", topics},
                       {"documents", docs.size()},
                       {"unlabeled", unlabeled},
                       {"vocabulary", model.vocabulary.size()},
                       {"alpha", model.alpha},
                       {"beta", model.beta},
                       {"iterations", lda.iterations},
                       {"seed", lda.seed},
                       {"final_log_likelihood",
                        model.log_likelihood_trace.empty() ? json(nullptr) : json(model.log_likelihood_trace.back())}};
  write_json(c.out / "topics.json", report);
  const std::string text = format_table(rows);
  write_text(c.out / "topics.txt", text);
  out << text;
  return 0;
}

int cmd_topics_train(const RunConfig& c, const std::string& labels_arg, std::ostream& out) {
  const fs::path labels_path = labels_arg.empty() ? c.out / "topic_labels.csv" : fs::path(labels_arg);
  if (!fs::exists(labels_path)) throw IoError(fmt::format("topic labels {} do not exist", labels_path.string()));
  std::map<std::string, std::size_t> labels;
  for (const auto& l : labels_from_csv(io::read_file(labels_path))) {
    if (l.topic) labels[l.paper_id] = *l.topic;
  }
  const Corpus corpus = load_config_corpus(c);
  const auto provider = make_provider(c);
  const ExampleSpec spec{c.target, c.representation, c.context_kind(), c.snapshot_date};
  const auto build = build_examples(corpus, provider.get(), spec);
  PerTopicConfig cfg;
  cfg.top_topics = c.top_topics;
  cfg.min_size = c.min_topic_size;
  cfg.split = c.split;
  cfg.train = c.training;
  cfg.train.seed = c.seeds.front();
  cfg.architecture = c.architecture;
  cfg.architecture.kind = c.model_kind;
  cfg.architecture.dim = provider.get().dimension();
  const auto reports = per_topic_training(build.examples, labels, cfg);
  json arr = json::array();
  std::vector<std::vector<std::string>> rows = {{"topic", "samples", "accuracy", "rho_s", "note"}};
  for (const auto& r : reports) {
    arr.push_back(r.to_json());
    rows.push_back({std::to_string(r.topic), std::to_string(r.n_samples),
                    r.metrics ? fmt_opt(r.metrics->pairwise_accuracy) : "-",
                    r.metrics ? fmt_opt(r.metrics->spearman) : "-", r.skipped.value_or("")});
  }
  write_json(c.out / "per_topic.json", {{"reports", arr}});
  const std::string text = format_table(rows);
  write_text(c.out / "per_topic.txt", text);
  out << text;
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"sdq: scholarly document quality prediction toolkit", "sdq"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "run configuration (JSON)");
  app.add_option("--seed", g.seed, "use this single seed instead of the configured list");
  app.add_option("--threads", g.threads, "thread budget")->check(CLI::PositiveNumber);
  app.add_option("--provider", g.provider, "embedding provider")->check(CLI::IsMember({"stub", "remote"}));
  app.add_option("--endpoint", g.endpoint, "embedding server URL for the remote provider");
  app.add_flag("--no-cache", g.no_cache, "do not read or write the embedding cache");
  app.add_option("--out", g.out, "output directory");
  app.add_flag("--no-network", g.no_network, "fail instead of contacting remote services");

  IngestOptions ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "harmonize a raw export directory into a corpus");
  ingest_cmd->add_option("export_dir", ingest.export_dir, "directory of raw *.jsonl exports")->required();
  std::string mapping_flag;
  ingest_cmd->add_option("--mapping", mapping_flag, "field mapping and scale config (JSON)");
  ingest_cmd->add_option("--corpus-out", ingest.corpus_out, "output corpus path (default <out>/corpus.jsonl)");
  ingest_cmd->add_flag("--skip-bad", ingest.skip_bad, "skip malformed records instead of failing");
  ingest_cmd->add_flag("--fetch-citations", ingest.fetch_citations, "fill citation counts from the citation API");

  auto* embed_cmd = app.add_subcommand("embed", "embed the corpus into the cache");
  auto* train_cmd = app.add_subcommand("train", "train score models over the configured seeds");

  std::vector<std::string> eval_models;
  std::string eval_split = "test";
  auto* eval_cmd = app.add_subcommand("evaluate", "evaluate trained models");
  eval_cmd->add_option("--model", eval_models, "checkpoint(s); default <out>/model_seed<N>.sdqc");
  eval_cmd->add_option("--split", eval_split, "split to score")->check(CLI::IsMember({"train", "validation", "test", "all"}));

  std::string rank_model, rank_input;
  bool rank_swiss = false;
  std::size_t rank_rounds = 4;
  auto* rank_cmd = app.add_subcommand("rank", "rank papers by tournament");
  rank_cmd->add_option("--model", rank_model, "checkpoint; default <out>/model_seed<first seed>.sdqc");
  rank_cmd->add_option("--input", rank_input, "corpus file or directory of corpus files (default: configured corpus)");
  rank_cmd->add_flag("--swiss", rank_swiss, "Swiss system instead of round robin");
  rank_cmd->add_option("--rounds", rank_rounds, "Swiss rounds")->check(CLI::PositiveNumber);

  auto* analyze_cmd = app.add_subcommand("analyze", "review-dimension, citation and consistency analyses");

  std::string sec_raw, sec_synonyms, sec_model, sec_text, sec_input;
  auto* sections_cmd = app.add_subcommand("sections", "section dataset and classifier");
  sections_cmd->require_subcommand(1);
  auto* sec_dataset = sections_cmd->add_subcommand("dataset", "build the heading-matched dataset");
  auto* sec_train = sections_cmd->add_subcommand("train", "train the section classifier");
  for (auto* sc : {sec_dataset, sec_train}) {
    sc->add_option("--raw", sec_raw, "raw papers JSONL with headed sections")->required();
    sc->add_option("--synonyms", sec_synonyms, "synonym table JSON");
  }
  auto* sec_classify = sections_cmd->add_subcommand("classify", "classify a paragraph");
  sec_classify->add_option("--model", sec_model, "classifier checkpoint");
  auto* text_opt = sec_classify->add_option("--text", sec_text, "paragraph text");
  sec_classify->add_option("--input", sec_input, "file holding the paragraph")->excludes(text_opt);

  std::string topic_labels;
  auto* topics_cmd = app.add_subcommand("topics", "LDA topic labels and per-topic models");
  topics_cmd->require_subcommand(1);
  auto* topics_fit = topics_cmd->add_subcommand("fit", "fit LDA and label the corpus");
  auto* topics_train = topics_cmd->add_subcommand("train", "train per-topic score models");
  topics_train->add_option("--labels", topic_labels, "topic labels CSV (default <out>/topic_labels.csv)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  std::string stage = "config";
  try {
    RunConfig c = resolve_config(g);
    if (!mapping_flag.empty()) c.mapping = mapping_flag;
    if (*ingest_cmd) {
      stage = "ingest";
      return cmd_ingest(c, ingest, out, err);
    }
    if (*embed_cmd) {
      stage = "embed";
      return cmd_embed(c, out, err);
    }
    if (*train_cmd) {
      stage = "train";
      return cmd_train(c, out, err);
    }
    if (*eval_cmd) {
      stage = "evaluate";
      return cmd_evaluate(c, eval_models, eval_split, out, err);
    }
    if (*rank_cmd) {
      stage = "rank";
      return cmd_rank(c, rank_model, rank_input, rank_swiss, rank_rounds, out, err);
    }
    if (*analyze_cmd) {
      stage = "analyze";
      return cmd_analyze(c, out, err);
    }
    if (*sections_cmd) {
      stage = "sections";
      if (*sec_dataset) return cmd_sections_dataset(c, sec_raw, sec_synonyms, out);
      if (*sec_train) return cmd_sections_train(c, sec_raw, sec_synonyms, out);
      if (sec_text.empty() && sec_input.empty()) throw ValidationError("classify needs --text or --input");
      return cmd_sections_classify(c, sec_model, sec_text, sec_input, out);
    }
    if (*topics_cmd) {
      stage = "topics";
      if (*topics_fit) return cmd_topics_fit(c, out);
      return cmd_topics_train(c, topic_labels, out);
    }
  } catch (const std::exception& e) {
    err << fmt::format("sdq {}: error: {}\n", stage, e.what());
    return 1;
  }
  return 1;
}

}  // namespace sdq::cli
