#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sdq/error.hpp"

namespace sdq {

using EmbeddingVector = std::vector<float>;

inline constexpr std::size_t kEmbeddingDim = 768;

// Collapses every whitespace run (including CR/LF) to one space and trims.
std::string normalize_whitespace(std::string_view text);

// Rule-based splitter over whitespace-normalized text. Splits after '.', '!'
// or '?' (plus trailing quotes/brackets) when followed by a space and a
// non-lowercase character, unless the word carrying the period is a known
// abbreviation ("et al.", "Fig.", "Eq.", "e.g.", ...) or a single initial.
std::vector<std::string> segment_sentences(std::string_view text);

// Whitespace tokens x 1.3, rounded up: a conservative stand-in for subword
// token counts.
std::size_t proxy_token_count(std::string_view text);

using TokenCounter = std::function<std::size_t(std::string_view)>;

struct ChunkPlan {
  std::vector<std::string> chunks;          // sentences joined by single spaces
  std::vector<std::size_t> sentence_counts;  // sentences per chunk
  std::vector<bool> over_budget;             // single sentence exceeding the budget
};

// Greedy packing: keep appending sentences while the chunk stays within
// `token_budget`; a sentence that alone exceeds the budget becomes its own
// flagged chunk.
ChunkPlan pack_chunks(std::span<const std::string> sentences, std::size_t token_budget,
                      const TokenCounter& counter = proxy_token_count);

class ProviderError : public Error {
 public:
  ProviderError(const std::string& what, std::optional<std::size_t> chunk = std::nullopt)
      : Error(what), chunk_(chunk) {}
  std::optional<std::size_t> chunk_index() const noexcept { return chunk_; }

 private:
  std::optional<std::size_t> chunk_;
};

/// Source of fixed-size text embeddings. Implementations must be deterministic
/// for a given configuration and safe to call concurrently.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual std::size_t dimension() const = 0;
  virtual std::size_t token_budget() const = 0;
  // Identifies the provider configuration; cache entries are keyed by it.
  virtual std::string identity() const = 0;
  virtual EmbeddingVector embed_chunk(std::string_view text) const = 0;
  virtual std::vector<EmbeddingVector> embed_many(std::span<const std::string> texts) const;

  std::uint64_t identity_hash() const;
};

// normalize -> segment -> pack to the provider's budget -> embed each chunk ->
// unweighted mean. A text that fits one chunk returns embed_chunk(text).
// Throws ValidationError for empty text and ProviderError (with the chunk
// index) when the provider fails.
EmbeddingVector embed_text(std::string_view text, const EmbeddingProvider& provider);

/// Offline provider: each token gets a pseudo-random vector derived from
/// (seed, token) by a counter-based generator; a chunk embeds to the L2-
/// normalized mean of its token vectors. Output is identical on every platform.
class DeterministicEmbedder final : public EmbeddingProvider {
 public:
  explicit DeterministicEmbedder(std::uint64_t seed, std::size_t dimension = kEmbeddingDim,
                                 std::size_t token_budget = 512);

  std::size_t dimension() const override { return dim_; }
  std::size_t token_budget() const override { return budget_; }
  std::string identity() const override;
  EmbeddingVector embed_chunk(std::string_view text) const override;

  // Lowercased whitespace tokens with surrounding punctuation stripped.
  static std::vector<std::string> tokenize(std::string_view text);

 private:
  std::uint64_t seed_;
  std::size_t dim_;
  std::size_t budget_;
};

std::unique_ptr<EmbeddingProvider> deterministic_test_embedder(std::uint64_t seed);

/// Client for the /embed HTTP protocol (see README). Queries /info once at
/// construction for dimension, token budget and model revision.
class RemoteEmbedder final : public EmbeddingProvider {
 public:
  explicit RemoteEmbedder(std::string endpoint, std::size_t max_batch = 64, int timeout_seconds = 120);

  std::size_t dimension() const override { return dim_; }
  std::size_t token_budget() const override { return budget_; }
  std::string identity() const override;
  EmbeddingVector embed_chunk(std::string_view text) const override;
  std::vector<EmbeddingVector> embed_many(std::span<const std::string> texts) const override;

  const std::string& model_id() const noexcept { return model_id_; }
  const std::string& revision() const noexcept { return revision_; }

 private:
  std::string endpoint_;
  std::size_t max_batch_;
  int timeout_seconds_;
  std::size_t dim_ = 0;
  std::size_t budget_ = 0;
  std::string model_id_;
  std::string revision_;
};

/// Append-only binary store of embeddings keyed by (provider, SHA-256 of text).
///
/// Layout: "SDQE", u16 version, u16 dimension, then fixed-size records of
/// 32-byte text hash, 8-byte provider hash, `dimension` little-endian float32
/// values and a CRC-32 over the preceding record bytes. Records failing the
/// checksum (or a truncated tail) are skipped on open and listed in problems().
class EmbeddingCache {
 public:
  using TextKey = std::array<unsigned char, 32>;

  static constexpr std::uint16_t kVersion = 1;
  static constexpr std::size_t kHeaderBytes = 8;
  static std::size_t record_bytes(std::size_t dimension) { return 32 + 8 + 4 * dimension + 4; }

  EmbeddingCache(std::filesystem::path path, std::size_t dimension);

  std::optional<EmbeddingVector> get(std::uint64_t provider_id, std::string_view text) const;
  void put(std::uint64_t provider_id, std::string_view text, const EmbeddingVector& vector);

  std::size_t size() const;
  std::size_t dimension() const noexcept { return dim_; }
  const std::vector<std::string>& problems() const noexcept { return problems_; }
  const std::filesystem::path& path() const noexcept { return path_; }

  static TextKey hash_text(std::string_view text);

 private:
  struct Key {
    TextKey text;
    std::uint64_t provider;
    auto operator<=>(const Key&) const = default;
  };

  void load();

  std::filesystem::path path_;
  std::size_t dim_;
  std::map<Key, EmbeddingVector> entries_;
  std::vector<std::string> problems_;
  mutable std::shared_mutex mutex_;
  std::ofstream out_;
};

// Provider decorator that serves and fills an EmbeddingCache.
class CachedProvider final : public EmbeddingProvider {
 public:
  CachedProvider(const EmbeddingProvider& inner, EmbeddingCache& cache);

  std::size_t dimension() const override { return inner_.dimension(); }
  std::size_t token_budget() const override { return inner_.token_budget(); }
  std::string identity() const override { return inner_.identity(); }
  EmbeddingVector embed_chunk(std::string_view text) const override;
  std::vector<EmbeddingVector> embed_many(std::span<const std::string> texts) const override;

 private:
  const EmbeddingProvider& inner_;
  EmbeddingCache& cache_;
  std::uint64_t id_;
};

}  // namespace sdq
