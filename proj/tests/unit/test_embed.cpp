#include <doctest.h>

#include <atomic>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "sdq/embed.hpp"
#include "sdq/error.hpp"
#include "synthetic.hpp"
// after Eigen: <resolv.h> defines _res as a macro
#include "stub_server.hpp"

using namespace sdq;
using sdq::testing::TempDir;

namespace {

// Returns a fixed vector per text, counting calls.
class TableProvider final : public EmbeddingProvider {
 public:
  TableProvider(std::size_t dim, std::size_t budget) : dim_(dim), budget_(budget) {}
  std::size_t dimension() const override { return dim_; }
  std::size_t token_budget() const override { return budget_; }
  std::string identity() const override { return "table"; }
  EmbeddingVector embed_chunk(std::string_view text) const override {
    ++calls;
    EmbeddingVector v(dim_, 0.0f);
    v[std::hash<std::string_view>{}(text) % dim_] = 1.0f;
    v[text.size() % dim_] += 2.0f;
    return v;
  }
  mutable std::atomic<int> calls{0};

 private:
  std::size_t dim_, budget_;
};

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

}  // namespace

TEST_SUITE("embed") {
  TEST_CASE("sentence segmentation") {
    CHECK(segment_sentences("").empty());
    CHECK(segment_sentences("A cat. A dog.") == std::vector<std::string>{"A cat.", "A dog."});
    CHECK(segment_sentences("See Fig. 2. It works.") == std::vector<std::string>{"See Fig. 2.", "It works."});

    const std::vector<std::string> fixture = {
        "Smith et al. propose a method.",
        "As shown in Fig. 3, the loss drops.",
        "We use e.g. dropout and i.e. regularization.",
        "Eq. 4 defines the objective.",
        "J. Doe wrote the code.",
        "Is it fast?",
        "Yes!",
        "Results (see Sec. 5) are strong.",
        "\"Quoted text ends here.\"",
        "The value is 3.5 on average.",
        "Compare with Tab. 2 and Eqs. 1-3.",
        "Finally, we conclude."};
    std::string joined;
    for (const auto& s : fixture) joined += (joined.empty() ? "" : " ") + s;
    CHECK(segment_sentences(joined) == fixture);
    CHECK(segment_sentences("  lots   of\n\nspace.  Next one.") ==
          std::vector<std::string>{"lots of space.", "Next one."});
  }

  TEST_CASE("greedy chunk packing") {
    const TokenCounter words = [](std::string_view s) {
      return static_cast<std::size_t>(std::count(s.begin(), s.end(), ' ') + 1);
    };
    const std::vector<std::string> three = {"a b c d", "e f g h", "i j k l"};
    auto plan = pack_chunks(three, 8, words);
    CHECK(plan.chunks == std::vector<std::string>{"a b c d e f g h", "i j k l"});
    CHECK(plan.sentence_counts == std::vector<std::size_t>{2, 1});
    plan = pack_chunks(three, 100, words);
    CHECK(plan.chunks.size() == 1);
    const std::vector<std::string> long_one = {"1 2 3 4 5 6 7 8 9 10 11 12 13 14 15 16 17 18 19 20"};
    plan = pack_chunks(long_one, 8, words);
    REQUIRE(plan.chunks.size() == 1);
    CHECK(plan.over_budget[0]);
    CHECK(proxy_token_count("one two three") == 4);
  }

  TEST_CASE("embed_text: single chunk identity and multi-chunk mean") {
    TableProvider p(16, 1000);
    const std::string text = "A short text. Two sentences.";
    CHECK(embed_text(text, p) == p.embed_chunk(text));

    TableProvider small(16, 4);  // forces one chunk per sentence
    const std::vector<std::string> sentences = {"Alpha beta.", "Gamma delta.", "Epsilon zeta.", "Eta theta.",
                                                "Iota kappa."};
    std::string joined;
    for (const auto& s : sentences) joined += s + " ";
    const auto got = embed_text(joined, small);
    std::vector<double> oracle(16, 0.0);
    for (const auto& s : sentences) {
      const auto v = small.embed_chunk(s);
      for (std::size_t i = 0; i < 16; ++i) oracle[i] += v[i] / 5.0;
    }
    for (std::size_t i = 0; i < 16; ++i) CHECK(got[i] == doctest::Approx(oracle[i]).epsilon(1e-6));
    CHECK_THROWS_AS(embed_text("   ", small), ValidationError);
  }

  TEST_CASE("two orthogonal chunk vectors average to one half each") {
    struct Two final : EmbeddingProvider {
      std::size_t dimension() const override { return 4; }
      std::size_t token_budget() const override { return 2; }
      std::string identity() const override { return "two"; }
      EmbeddingVector embed_chunk(std::string_view t) const override {
        return t.front() == 'F' ? EmbeddingVector{1, 0, 0, 0} : EmbeddingVector{0, 1, 0, 0};
      }
    } two;
    CHECK(embed_text("First one. Second one.", two) == EmbeddingVector{0.5f, 0.5f, 0.0f, 0.0f});
  }

  TEST_CASE("provider failures carry the chunk index") {
    struct Failing final : EmbeddingProvider {
      std::size_t dimension() const override { return 4; }
      std::size_t token_budget() const override { return 2; }
      std::string identity() const override { return "failing"; }
      EmbeddingVector embed_chunk(std::string_view t) const override {
        if (t.front() == 'C') throw std::runtime_error("boom");
        return EmbeddingVector(4, 1.0f);
      }
    } failing;
    try {
      embed_text("Aa bb. Bb cc. Cc dd.", failing);
      FAIL("expected ProviderError");
    } catch (const ProviderError& e) {
      CHECK(e.chunk_index() == std::optional<std::size_t>(2));
    }
  }

  TEST_CASE("deterministic embedder") {
    DeterministicEmbedder e(3);
    CHECK(e.dimension() == 768);
    CHECK(e.embed_chunk("hello world") == e.embed_chunk("hello world"));
    CHECK(e.embed_chunk("a b") == e.embed_chunk("b a"));
    CHECK(e.embed_chunk("Hello, world!") == e.embed_chunk("hello world"));
    CHECK(e.embed_chunk("hello") != DeterministicEmbedder(4).embed_chunk("hello"));
    const auto v = e.embed_chunk("some text here");
    double norm = 0;
    for (float x : v) norm += x * x;
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-5));

    Rng rng(1);
    const auto vocab = sdq::testing::numbered_vocab("v", 5000);
    int holds = 0;
    for (int i = 0; i < 100; ++i) {
      std::vector<std::string> a, b, c;
      for (int k = 0; k < 20; ++k) a.push_back(vocab[rng.below(vocab.size())]);
      for (int k = 0; k < 10; ++k) b.push_back(a[k]);
      for (int k = 0; k < 10; ++k) b.push_back(vocab[rng.below(vocab.size())]);
      for (int k = 0; k < 20; ++k) c.push_back(vocab[rng.below(vocab.size())]);
      auto join = [](const std::vector<std::string>& w) {
        return std::accumulate(w.begin(), w.end(), std::string(), [](std::string s, const std::string& x) {
          return s.empty() ? x : s + " " + x;
        });
      };
      const auto ea = e.embed_chunk(join(a));
      if (cosine(ea, e.embed_chunk(join(b))) > cosine(ea, e.embed_chunk(join(c)))) ++holds;
    }
    CHECK(holds >= 95);
  }

  TEST_CASE("embedding cache round trip, reopen and size") {
    TempDir dir("cache");
    const auto path = dir / "e.sdqe";
    Rng rng(2);
    {
      EmbeddingCache cache(path, 768);
      CHECK_FALSE(cache.get(1, "nothing"));
      EmbeddingVector v(768);
      for (auto& x : v) x = static_cast<float>(rng.normal());
      cache.put(1, "text", v);
      CHECK(*cache.get(1, "text") == v);
      CHECK_FALSE(cache.get(2, "text"));
      for (int i = 0; i < 9999; ++i) {
        EmbeddingVector w(768);
        for (auto& x : w) x = static_cast<float>(i + 0.25);
        cache.put(7, "entry " + std::to_string(i), w);
      }
    }
    EmbeddingCache reopened(path, 768);
    CHECK(reopened.size() == 10000);
    CHECK(reopened.problems().empty());
    for (int i = 0; i < 9999; i += 97) {
      const auto got = reopened.get(7, "entry " + std::to_string(i));
      REQUIRE(got);
      CHECK((*got)[767] == static_cast<float>(i + 0.25));
    }
    const double expected = 10000.0 * (32 + 8 + 768 * 4 + 4);
    const double actual = static_cast<double>(std::filesystem::file_size(path));
    CHECK(std::abs(actual - expected) / expected < 0.10);
    CHECK_THROWS(EmbeddingCache(path, 384));
  }

  TEST_CASE("corrupt and truncated cache records are skipped") {
    TempDir dir("cache");
    const auto path = dir / "e.sdqe";
    {
      EmbeddingCache cache(path, 8);
      for (int i = 0; i < 3; ++i) cache.put(1, "t" + std::to_string(i), EmbeddingVector(8, static_cast<float>(i)));
    }
    const auto rec = EmbeddingCache::record_bytes(8);
    {
      std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
      f.seekp(static_cast<std::streamoff>(EmbeddingCache::kHeaderBytes + rec + 45));
      f.put('\x7f');
    }
    {
      std::ofstream f(path, std::ios::app | std::ios::binary);
      f << "tail";
    }
    EmbeddingCache cache(path, 8);
    CHECK(cache.size() == 2);
    CHECK(cache.problems().size() == 2);
    CHECK(cache.get(1, "t0"));
    CHECK_FALSE(cache.get(1, "t1"));
    CHECK(cache.get(1, "t2"));
  }

  TEST_CASE("cached provider only calls through on misses") {
    TempDir dir("cache");
    TableProvider inner(8, 100);
    EmbeddingCache cache(dir / "c.sdqe", 8);
    CachedProvider cached(inner, cache);
    const auto a = cached.embed_chunk("x y");
    const auto b = cached.embed_chunk("x y");
    CHECK(a == b);
    CHECK(inner.calls == 1);
    const std::vector<std::string> texts = {"x y", "new", "new"};
    const auto many = cached.embed_many(texts);
    CHECK(many[0] == a);
    CHECK(many[1] == many[2]);
    CHECK(inner.calls == 2);
  }
}

TEST_SUITE("remote-embedder") {
  using sdq::testing::StubServer;

  // Protocol stub backed by the deterministic embedder.
  struct EmbedStub {
    StubServer s;
    DeterministicEmbedder backing{9, 32, 64};
    std::atomic<int> embed_requests{0};
    std::atomic<std::size_t> max_seen{0};
    bool short_reply = false;

    EmbedStub() {
      s.server.Get("/info", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"model_id": "stub-model", "dimension": 32, "max_tokens": 64, "revision": "r1"})",
                        "application/json");
      });
      s.server.Post("/embed", [this](const httplib::Request& req, httplib::Response& res) {
        ++embed_requests;
        const auto texts = nlohmann::json::parse(req.body).at("texts");
        if (texts.size() > max_seen) max_seen = texts.size();
        nlohmann::json out = {{"model_id", "stub-model"}, {"embeddings", nlohmann::json::array()},
                              {"chunked", nlohmann::json::array()}};
        for (std::size_t i = 0; i < texts.size() - (short_reply ? 1 : 0); ++i) {
          out["embeddings"].push_back(backing.embed_chunk(texts[i].get<std::string>()));
          out["chunked"].push_back(false);
        }
        res.set_content(out.dump(), "application/json");
      });
      s.start();
    }
  };

  TEST_CASE("metadata and single embeddings follow the protocol") {
    EmbedStub stub;
    RemoteEmbedder remote(stub.s.url());
    CHECK(remote.dimension() == 32);
    CHECK(remote.token_budget() == 64);
    CHECK(remote.model_id() == "stub-model");
    CHECK(remote.revision() == "r1");
    CHECK(remote.identity().find("stub-model") != std::string::npos);
    CHECK(remote.embed_chunk("hello world") == stub.backing.embed_chunk("hello world"));
  }

  TEST_CASE("batches are capped and preserve order") {
    EmbedStub stub;
    RemoteEmbedder remote(stub.s.url(), 4);
    std::vector<std::string> texts;
    for (int i = 0; i < 10; ++i) texts.push_back("text number " + std::to_string(i));
    const auto got = remote.embed_many(texts);
    REQUIRE(got.size() == 10);
    for (int i = 0; i < 10; ++i) CHECK(got[i] == stub.backing.embed_chunk(texts[i]));
    CHECK(stub.embed_requests == 3);
    CHECK(stub.max_seen == 4);
  }

  TEST_CASE("long texts are chunked client-side and averaged") {
    EmbedStub stub;
    RemoteEmbedder remote(stub.s.url());
    std::string text;
    for (int i = 0; i < 40; ++i) text += "Sentence number " + std::to_string(i) + " has several words in it. ";
    CHECK(embed_text(text, remote) == embed_text(text, stub.backing));
  }

  TEST_CASE("protocol violations and unreachable servers are provider errors") {
    EmbedStub stub;
    stub.short_reply = true;
    RemoteEmbedder remote(stub.s.url());
    CHECK_THROWS_AS(remote.embed_chunk("x"), ProviderError);
    CHECK_THROWS_AS(RemoteEmbedder("http://127.0.0.1:1"), ProviderError);
  }
}
