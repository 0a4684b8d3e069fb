#include <fmt/format.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "sdq/embed.hpp"

namespace sdq {

namespace {

httplib::Client make_client(const std::string& endpoint, int timeout_seconds) {
  httplib::Client client(endpoint);
  client.set_connection_timeout(std::chrono::seconds(5));
  client.set_read_timeout(std::chrono::seconds(timeout_seconds));
  return client;
}

}  // namespace

RemoteEmbedder::RemoteEmbedder(std::string endpoint, std::size_t max_batch, int timeout_seconds)
    : endpoint_(std::move(endpoint)), max_batch_(max_batch), timeout_seconds_(timeout_seconds) {
  if (max_batch_ == 0) throw ValidationError("RemoteEmbedder: max_batch must be positive");
  auto client = make_client(endpoint_, timeout_seconds_);
  const auto res = client.Get("/info");
  if (!res) {
    throw ProviderError(fmt::format("remote embedder {}: cannot reach /info ({})", endpoint_,
                                    httplib::to_string(res.error())));
  }
  if (res->status != 200) throw ProviderError(fmt::format("remote embedder {}: /info returned HTTP {}", endpoint_, res->status));
  try {
    const auto info = nlohmann::json::parse(res->body);
    model_id_ = info.at("model_id").get<std::string>();
    dim_ = info.at("dimension").get<std::size_t>();
    budget_ = info.value("max_tokens", std::size_t{512});
    revision_ = info.value("revision", std::string{});
  } catch (const nlohmann::json::exception& e) {
    throw ProviderError(fmt::format("remote embedder {}: malformed /info response: {}", endpoint_, e.what()));
  }
  if (dim_ == 0 || budget_ == 0) throw ProviderError("remote embedder: /info reports zero dimension or budget");
}

std::string RemoteEmbedder::identity() const { return fmt::format("remote:{}@{}:dim={}", model_id_, revision_, dim_); }

EmbeddingVector RemoteEmbedder::embed_chunk(std::string_view text) const {
  const std::string t(text);
  return std::move(embed_many(std::span<const std::string>(&t, 1)).front());
}

std::vector<EmbeddingVector> RemoteEmbedder::embed_many(std::span<const std::string> texts) const {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  auto client = make_client(endpoint_, timeout_seconds_);
  for (std::size_t start = 0; start < texts.size(); start += max_batch_) {
    const std::size_t end = std::min(texts.size(), start + max_batch_);
    nlohmann::json req = {{"texts", std::vector<std::string>(texts.begin() + static_cast<std::ptrdiff_t>(start),
                                                             texts.begin() + static_cast<std::ptrdiff_t>(end))}};
    const auto res = client.Post("/embed", req.dump(), "application/json");
    if (!res) {
      throw ProviderError(fmt::format("remote embedder {}: /embed failed ({})", endpoint_, httplib::to_string(res.error())));
    }
    if (res->status != 200) {
      throw ProviderError(fmt::format("remote embedder {}: /embed returned HTTP {}: {}", endpoint_, res->status,
                                      res->body.substr(0, 200)));
    }
    try {
      const auto body = nlohmann::json::parse(res->body);
      const auto& embs = body.at("embeddings");
      if (!embs.is_array() || embs.size() != end - start) {
        throw ProviderError(fmt::format("remote embedder: expected {} embeddings, got {}", end - start,
                                        embs.is_array() ? embs.size() : 0));
      }
      for (const auto& e : embs) {
        auto v = e.get<std::vector<float>>();
        if (v.size() != dim_) {
          throw ProviderError(fmt::format("remote embedder: vector of length {} (declared {})", v.size(), dim_));
        }
        out.push_back(std::move(v));
      }
    } catch (const nlohmann::json::exception& e) {
      throw ProviderError(fmt::format("remote embedder {}: malformed /embed response: {}", endpoint_, e.what()));
    }
  }
  return out;
}

}  // namespace sdq
