#include <cstdlib>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>

#include "sdq/error.hpp"
#include "sdq/harmonize.hpp"

namespace sdq {

CitationClientConfig CitationClientConfig::from_env(CitationClientConfig base) {
  if (const char* key = std::getenv("SDQ_API_KEY"); key != nullptr && *key != '\0') base.api_key = key;
  return base;
}

CitationClientConfig CitationClientConfig::from_env() { return from_env(CitationClientConfig{}); }

CitationClientConfig CitationClientConfig::from_json(const nlohmann::json& j) {
  CitationClientConfig c;
  c.base_url = j.value("base_url", c.base_url);
  c.batch_path = j.value("batch_path", c.batch_path);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.max_retries = j.value("max_retries", c.max_retries);
  c.min_interval = std::chrono::milliseconds(j.value("min_interval_ms", c.min_interval.count()));
  c.retry_backoff = std::chrono::milliseconds(j.value("retry_backoff_ms", c.retry_backoff.count()));
  c.timeout = std::chrono::seconds(j.value("timeout_s", c.timeout.count()));
  if (c.batch_size == 0) throw ValidationError("citation client: batch_size must be positive");
  if (c.max_retries < 0) throw ValidationError("citation client: max_retries must be >= 0");
  return c;
}

CitationClient::CitationClient(CitationClientConfig config) : config_(std::move(config)) {
  if (config_.batch_size == 0) throw ValidationError("citation client: batch_size must be positive");
}

std::string CitationClient::post_with_retries(const std::string& body) {
  httplib::Client client(config_.base_url);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("x-api-key", config_.api_key);
  const std::string path = config_.batch_path + "?fields=citationCount,influentialCitationCount";

  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(config_.retry_backoff * attempt);
    const auto now = std::chrono::steady_clock::now();
    if (requests_ > 0 && now - last_request_ < config_.min_interval) {
      std::this_thread::sleep_for(config_.min_interval - (now - last_request_));
    }
    last_request_ = std::chrono::steady_clock::now();
    ++requests_;
    const auto res = client.Post(path, headers, body, "application/json");
    if (!res) {
      last_error = "connection failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 200) return res->body;
    last_error = fmt::format("HTTP {}: {}", res->status, res->body.substr(0, 200));
    if (res->status != 429 && res->status < 500) break;  // client errors are not retried
  }
  throw NetworkError(fmt::format("citation lookup failed after {} attempt(s): {}", config_.max_retries + 1,
                                 last_error));
}

std::map<std::string, CitationCounts> CitationClient::fetch(const std::vector<std::string>& ids) {
  std::map<std::string, CitationCounts> out;
  for (std::size_t start = 0; start < ids.size(); start += config_.batch_size) {
    const std::size_t end = std::min(ids.size(), start + config_.batch_size);
    const std::vector<std::string> batch(ids.begin() + static_cast<std::ptrdiff_t>(start),
                                         ids.begin() + static_cast<std::ptrdiff_t>(end));
    const std::string body = nlohmann::json{{"ids", batch}}.dump();
    const std::string response = post_with_retries(body);

    nlohmann::json parsed;
    try {
      parsed = nlohmann::json::parse(response);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(fmt::format("citation lookup: malformed response: {}", e.what()));
    }
    if (!parsed.is_array() || parsed.size() != batch.size()) {
      throw ParseError(fmt::format("citation lookup: expected an array of {} entries", batch.size()));
    }
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const auto& entry = parsed[i];
      if (entry.is_null()) continue;
      if (!entry.is_object()) throw ParseError("citation lookup: entry is neither null nor an object");
      const auto c = entry.find("citationCount");
      if (c == entry.end() || c->is_null()) continue;
      if (!c->is_number_integer() || c->get<std::int64_t>() < 0) {
        throw ParseError(fmt::format("citation lookup: bad citationCount for {}", batch[i]));
      }
      CitationCounts counts;
      counts.citations = c->get<std::uint64_t>();
      if (const auto inf = entry.find("influentialCitationCount"); inf != entry.end() && inf->is_number_integer()) {
        counts.influential_citations = inf->get<std::uint64_t>();
      }
      out[batch[i]] = counts;
    }
  }
  return out;
}

}  // namespace sdq
