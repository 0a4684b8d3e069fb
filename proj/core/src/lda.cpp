#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "sdq/binary_io.hpp"
#include "sdq/topics.hpp"

namespace sdq {
namespace {

constexpr char kMagic[4] = {'S', 'D', 'Q', 'L'};
constexpr std::uint16_t kVersion = 1;

std::size_t sample(const std::vector<double>& weights, double total, Rng& rng) {
  double u = rng.uniform() * total;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    u -= weights[k];
    if (u < 0.0) return k;
  }
  return weights.size() - 1;
}

}  // namespace

void LdaConfig::validate() const {
  if (topics < 2) throw ValidationError("LDA needs at least 2 topics");
  if (alpha && !(*alpha > 0.0)) throw ValidationError("LDA alpha must be positive");
  if (!(beta > 0.0)) throw ValidationError("LDA beta must be positive");
}

std::uint64_t LdaState::token_count() const {
  return std::accumulate(topic_totals->begin(), topic_totals->end(), std::uint64_t{0});
}

double LdaState::log_likelihood() const {
  const double K = static_cast<double>(topics);
  const double V = static_cast<double>(vocabulary);
  double ll = K * (std::lgamma(V * beta) - V * std::lgamma(beta));
  for (std::size_t k = 0; k < topics; ++k) {
    for (std::size_t w = 0; w < vocabulary; ++w) {
      const auto c = (*topic_word)[k * vocabulary + w];
      if (c > 0) ll += std::lgamma(static_cast<double>(c) + beta) - std::lgamma(beta);
    }
    ll -= std::lgamma(static_cast<double>((*topic_totals)[k]) + V * beta) - std::lgamma(V * beta);
  }
  const std::size_t D = words->size();
  ll += static_cast<double>(D) * (std::lgamma(K * alpha) - K * std::lgamma(alpha));
  for (std::size_t d = 0; d < D; ++d) {
    for (std::size_t k = 0; k < topics; ++k) ll += std::lgamma(static_cast<double>((*doc_topic)[d * topics + k]) + alpha);
    ll -= std::lgamma(static_cast<double>((*words)[d].size()) + K * alpha);
  }
  return ll;
}

std::optional<std::size_t> LdaModel::word_id(std::string_view word) const {
  auto it = std::lower_bound(vocabulary.begin(), vocabulary.end(), word);
  if (it == vocabulary.end() || *it != word) return std::nullopt;
  return static_cast<std::size_t>(it - vocabulary.begin());
}

LdaModel fit_lda(const std::vector<std::vector<std::string>>& docs, const LdaConfig& config,
                 const GibbsObserver& observer) {
  config.validate();
  if (docs.empty()) throw ValidationError("LDA: empty corpus");
  if (docs.size() < config.topics) {
    throw ValidationError(fmt::format("LDA: {} documents for {} topics", docs.size(), config.topics));
  }
  LdaModel m;
  m.topics = config.topics;
  m.alpha = config.alpha_value();
  m.beta = config.beta;
  m.seed = config.seed;
  {
    std::set<std::string, std::less<>> vocab;
    for (const auto& d : docs) vocab.insert(d.begin(), d.end());
    m.vocabulary.assign(vocab.begin(), vocab.end());
  }
  if (m.vocabulary.empty()) throw ValidationError("LDA: empty vocabulary");
  const std::size_t K = m.topics;
  const std::size_t V = m.vocabulary.size();
  const std::size_t D = docs.size();

  std::vector<std::vector<std::uint32_t>> words(D);
  for (std::size_t d = 0; d < D; ++d) {
    for (const auto& t : docs[d]) words[d].push_back(static_cast<std::uint32_t>(*m.word_id(t)));
  }

  Rng rng(mix64(config.seed ^ 0x1da));
  std::vector<std::vector<std::uint32_t>> z(D);
  std::vector<std::uint64_t> nk(K, 0), nkw(K * V, 0), ndk(D * K, 0);
  for (std::size_t d = 0; d < D; ++d) {
    z[d].resize(words[d].size());
    for (std::size_t i = 0; i < words[d].size(); ++i) {
      const auto k = static_cast<std::uint32_t>(rng.below(K));
      z[d][i] = k;
      ++nk[k];
      ++nkw[k * V + words[d][i]];
      ++ndk[d * K + k];
    }
  }
  LdaState state{K, V, &words, &z, &nk, &nkw, &ndk, m.alpha, m.beta};

  const double vbeta = static_cast<double>(V) * m.beta;
  std::vector<double> p(K);
  for (std::size_t it = 1; it <= config.iterations; ++it) {
    for (std::size_t d = 0; d < D; ++d) {
      for (std::size_t i = 0; i < words[d].size(); ++i) {
        const std::size_t w = words[d][i];
        std::size_t k = z[d][i];
        --nk[k];
        --nkw[k * V + w];
        --ndk[d * K + k];
        double total = 0.0;
        for (std::size_t t = 0; t < K; ++t) {
          p[t] = (static_cast<double>(ndk[d * K + t]) + m.alpha) * (static_cast<double>(nkw[t * V + w]) + m.beta) /
                 (static_cast<double>(nk[t]) + vbeta);
          total += p[t];
        }
        k = sample(p, total, rng);
        z[d][i] = static_cast<std::uint32_t>(k);
        ++nk[k];
        ++nkw[k * V + w];
        ++ndk[d * K + k];
      }
    }
    m.log_likelihood_trace.push_back(state.log_likelihood());
    if (observer) observer(it, state);
  }

  m.topic_word.assign(K * V, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    const double denom = static_cast<double>(nk[k]) + vbeta;
    for (std::size_t w = 0; w < V; ++w) m.topic_word[k * V + w] = (static_cast<double>(nkw[k * V + w]) + m.beta) / denom;
  }
  m.assignments = std::move(z);
  return m;
}

std::optional<TopicPosterior> dominant_topic(const LdaModel& model, const std::vector<std::string>& doc,
                                             std::size_t iterations) {
  std::vector<std::size_t> ids;
  for (const auto& t : doc) {
    if (auto id = model.word_id(t)) ids.push_back(*id);
  }
  if (ids.empty()) return std::nullopt;
  const std::size_t K = model.topics;
  std::uint64_t h = model.seed;
  for (auto id : ids) h = mix64(h ^ id);
  Rng rng(h);

  std::vector<std::size_t> z(ids.size());
  std::vector<double> ndk(K, 0.0);
  for (auto& k : z) {
    k = rng.below(K);
    ndk[k] += 1.0;
  }
  iterations = std::max<std::size_t>(iterations, 1);
  const std::size_t burn_in = iterations / 2;
  std::vector<double> theta(K, 0.0);
  std::vector<double> p(K);
  for (std::size_t it = 0; it < iterations; ++it) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      ndk[z[i]] -= 1.0;
      double total = 0.0;
      for (std::size_t k = 0; k < K; ++k) total += p[k] = (ndk[k] + model.alpha) * model.phi(k, ids[i]);
      z[i] = sample(p, total, rng);
      ndk[z[i]] += 1.0;
    }
    if (it >= burn_in) {
      const double denom = static_cast<double>(ids.size()) + static_cast<double>(K) * model.alpha;
      for (std::size_t k = 0; k < K; ++k) theta[k] += (ndk[k] + model.alpha) / denom;
    }
  }
  const double samples = static_cast<double>(iterations - burn_in);
  for (auto& t : theta) t /= samples;
  TopicPosterior out;
  out.topic = static_cast<std::size_t>(std::max_element(theta.begin(), theta.end()) - theta.begin());
  out.theta = std::move(theta);
  return out;
}

std::vector<std::string> top_words(const LdaModel& model, std::size_t topic, std::size_t n) {
  if (topic >= model.topics) throw ValidationError(fmt::format("topic {} out of range", topic));
  const std::size_t V = model.vocabulary.size();
  std::vector<std::size_t> idx(V);
  std::iota(idx.begin(), idx.end(), 0);
  n = std::min(n, V);
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n), idx.end(), [&](std::size_t a, std::size_t b) {
    const double pa = model.phi(topic, a), pb = model.phi(topic, b);
    return pa != pb ? pa > pb : a < b;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(model.vocabulary[idx[i]]);
  return out;
}

std::string LdaModel::serialize() const {
  std::ostringstream out(std::ios::binary);
  out.write(kMagic, 4);
  io::write_u16(out, kVersion);
  io::write_u32(out, static_cast<std::uint32_t>(topics));
  io::write_u32(out, static_cast<std::uint32_t>(vocabulary.size()));
  io::write_f64(out, alpha);
  io::write_f64(out, beta);
  io::write_u64(out, seed);
  for (const auto& w : vocabulary) io::write_string(out, w);
  for (double v : topic_word) io::write_f64(out, v);
  return std::move(out).str();
}

LdaModel LdaModel::deserialize(std::string_view bytes) {
  std::istringstream in(std::string(bytes), std::ios::binary);
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0) throw IoError("not an LDA model (bad magic)");
  const auto version = io::read_u16(in);
  if (version != kVersion) throw IoError(fmt::format("unsupported LDA model version {}", version));
  LdaModel m;
  m.topics = io::read_u32(in);
  const std::size_t V = io::read_u32(in);
  m.alpha = io::read_f64(in);
  m.beta = io::read_f64(in);
  m.seed = io::read_u64(in);
  m.vocabulary.reserve(V);
  for (std::size_t i = 0; i < V; ++i) m.vocabulary.push_back(io::read_string(in));
  if (!std::is_sorted(m.vocabulary.begin(), m.vocabulary.end()) ||
      std::adjacent_find(m.vocabulary.begin(), m.vocabulary.end()) != m.vocabulary.end()) {
    throw IoError("LDA vocabulary is not sorted and unique");
  }
  m.topic_word.resize(m.topics * V);
  for (auto& v : m.topic_word) v = io::read_f64(in);
  if (in.peek() != std::char_traits<char>::eof()) throw IoError("trailing bytes after LDA model");
  return m;
}

void LdaModel::save(const std::filesystem::path& path) const { io::write_file_atomic(path, serialize()); }

LdaModel LdaModel::load(const std::filesystem::path& path) {
  try {
    return deserialize(io::read_file(path));
  } catch (const IoError& e) {
    throw IoError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::string labels_to_csv(const std::vector<TopicLabel>& labels) {
  std::string out = "paper_id,topic_id,probability\n";
  for (const auto& l : labels) {
    if (l.topic) {
      out += fmt::format("{},{},{:.6f}\n", l.paper_id, *l.topic, l.probability);
    } else {
      out += fmt::format("{},,\n", l.paper_id);
    }
  }
  return out;
}

std::vector<TopicLabel> labels_from_csv(std::string_view csv) {
  std::vector<TopicLabel> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < csv.size()) {
    std::size_t end = csv.find('\n', pos);
    if (end == std::string_view::npos) end = csv.size();
    std::string_view line = csv.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line_no == 1 || line.empty()) continue;
    // ids may contain commas; the two numeric fields never do
    const auto c2 = line.rfind(',');
    const auto c1 = c2 == std::string_view::npos || c2 == 0 ? std::string_view::npos : line.rfind(',', c2 - 1);
    if (c1 == std::string_view::npos) throw ParseError(fmt::format("labels line {}: expected 3 fields", line_no));
    TopicLabel l;
    l.paper_id = std::string(line.substr(0, c1));
    const auto topic = line.substr(c1 + 1, c2 - c1 - 1);
    const auto prob = line.substr(c2 + 1);
    try {
      if (!topic.empty()) l.topic = std::stoul(std::string(topic));
      if (!prob.empty()) l.probability = std::stod(std::string(prob));
    } catch (const std::exception&) {
      throw ParseError(fmt::format("labels line {}: bad number", line_no));
    }
    out.push_back(std::move(l));
  }
  return out;
}

}  // namespace sdq
