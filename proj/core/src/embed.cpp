#include "sdq/embed.hpp"

#include <cctype>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "sdq/rng.hpp"

namespace sdq {

std::vector<EmbeddingVector> EmbeddingProvider::embed_many(std::span<const std::string> texts) const {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed_chunk(t));
  return out;
}

std::uint64_t EmbeddingProvider::identity_hash() const { return fnv1a64(identity()); }

EmbeddingVector embed_text(std::string_view text, const EmbeddingProvider& provider) {
  const std::string normalized = normalize_whitespace(text);
  if (normalized.empty()) throw ValidationError("embed_text: empty text");
  const auto sentences = segment_sentences(normalized);
  const ChunkPlan plan = pack_chunks(sentences, provider.token_budget());

  std::vector<EmbeddingVector> vectors;
  vectors.reserve(plan.chunks.size());
  for (std::size_t i = 0; i < plan.chunks.size(); ++i) {
    try {
      vectors.push_back(provider.embed_chunk(plan.chunks[i]));
    } catch (const std::exception& e) {
      throw ProviderError(fmt::format("embedding chunk {} of {} failed: {}", i, plan.chunks.size(), e.what()), i);
    }
    if (vectors.back().size() != provider.dimension()) {
      throw ProviderError(fmt::format("chunk {}: provider returned dimension {} (declared {})", i,
                                      vectors.back().size(), provider.dimension()),
                          i);
    }
  }
  if (vectors.size() == 1) return std::move(vectors.front());

  std::vector<double> acc(provider.dimension(), 0.0);
  for (const auto& v : vectors) {
    for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += v[j];
  }
  EmbeddingVector mean(acc.size());
  const double n = static_cast<double>(vectors.size());
  for (std::size_t j = 0; j < acc.size(); ++j) mean[j] = static_cast<float>(acc[j] / n);
  return mean;
}

DeterministicEmbedder::DeterministicEmbedder(std::uint64_t seed, std::size_t dimension, std::size_t token_budget)
    : seed_(seed), dim_(dimension), budget_(token_budget) {
  if (dim_ == 0 || budget_ == 0) throw ValidationError("DeterministicEmbedder: dimension and budget must be positive");
}

std::string DeterministicEmbedder::identity() const {
  return fmt::format("stub:seed={}:dim={}:budget={}", seed_, dim_, budget_);
}

std::vector<std::string> DeterministicEmbedder::tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    std::string_view word = text.substr(i, j - i);
    while (!word.empty() && std::ispunct(static_cast<unsigned char>(word.front()))) word.remove_prefix(1);
    while (!word.empty() && std::ispunct(static_cast<unsigned char>(word.back()))) word.remove_suffix(1);
    if (!word.empty()) {
      std::string t(word);
      for (auto& c : t) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      tokens.push_back(std::move(t));
    }
    i = j;
  }
  return tokens;
}

EmbeddingVector DeterministicEmbedder::embed_chunk(std::string_view text) const {
  const auto tokens = tokenize(text);
  std::vector<double> acc(dim_, 0.0);
  for (const auto& tok : tokens) {
    const std::uint64_t key = mix64(seed_ ^ mix64(fnv1a64(tok)));
    for (std::size_t j = 0; j < dim_; ++j) acc[j] += 2.0 * to_unit_double(mix64(key + j)) - 1.0;
  }
  double norm = 0.0;
  for (double v : acc) norm += v * v;
  norm = std::sqrt(norm);
  EmbeddingVector out(dim_, 0.0f);
  if (norm > 0.0) {
    // mean then normalize == normalize the sum
    for (std::size_t j = 0; j < dim_; ++j) out[j] = static_cast<float>(acc[j] / norm);
  }
  return out;
}

std::unique_ptr<EmbeddingProvider> deterministic_test_embedder(std::uint64_t seed) {
  return std::make_unique<DeterministicEmbedder>(seed);
}

CachedProvider::CachedProvider(const EmbeddingProvider& inner, EmbeddingCache& cache)
    : inner_(inner), cache_(cache), id_(inner.identity_hash()) {
  if (cache.dimension() != inner.dimension()) {
    throw ValidationError(fmt::format("cache dimension {} does not match provider dimension {}", cache.dimension(),
                                      inner.dimension()));
  }
}

EmbeddingVector CachedProvider::embed_chunk(std::string_view text) const {
  if (auto hit = cache_.get(id_, text)) return std::move(*hit);
  EmbeddingVector v = inner_.embed_chunk(text);
  cache_.put(id_, text, v);
  return v;
}

std::vector<EmbeddingVector> CachedProvider::embed_many(std::span<const std::string> texts) const {
  std::vector<EmbeddingVector> out(texts.size());
  std::vector<std::string> missing;
  std::map<std::string_view, std::vector<std::size_t>> missing_at;  // repeated texts are embedded once
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (auto hit = cache_.get(id_, texts[i])) {
      out[i] = std::move(*hit);
      continue;
    }
    auto& slots = missing_at[texts[i]];
    if (slots.empty()) missing.push_back(texts[i]);
    slots.push_back(i);
  }
  if (!missing.empty()) {
    auto fresh = inner_.embed_many(missing);
    for (std::size_t k = 0; k < missing.size(); ++k) {
      cache_.put(id_, missing[k], fresh[k]);
      for (auto i : missing_at.at(missing[k])) out[i] = fresh[k];
    }
  }
  return out;
}

}  // namespace sdq
