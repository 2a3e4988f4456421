#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "mmrag/errors.hpp"
#include "mmrag/hash.hpp"
#include "mmrag/providers.hpp"
#include "test_support.hpp"

using namespace mmrag;
using testsupport::TempDir;

TEST_CASE("default tokenizer") {
    DefaultTokenizer tok;
    CHECK(tok.tokenize("Hello, World!") == std::vector<std::string>{"hello", "world"});
    CHECK(tok.tokenize("  spaced\tout\nwords ") ==
          std::vector<std::string>{"spaced", "out", "words"});
    CHECK(tok.tokenize("keep 42 numerals") == std::vector<std::string>{"keep", "42", "numerals"});
    CHECK(tok.tokenize("don't strip internal") ==
          std::vector<std::string>{"don't", "strip", "internal"});
    CHECK(tok.tokenize("--- ...") == std::vector<std::string>{}); // punctuation-only spans vanish
    CHECK(tok.tokenize("").empty());
    CHECK(tok.count("one two three") == 3);
    CHECK(tok.count("a b") == 2); // no-break space splits
}

TEST_CASE("hash embedder determinism and normalization") {
    HashEmbedder emb(256);
    auto first = emb.embed_batch({"abc"});
    auto second = emb.embed_batch({"abc"});
    REQUIRE(first.size() == 1);
    CHECK(first[0] == second[0]);

    double norm = 0.0;
    for (double v : first[0].values) norm += v * v;
    CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-9));

    auto batch = emb.embed_batch({"one", "two", "three"});
    REQUIRE(batch.size() == 3);
    for (const auto& e : batch) CHECK(e.dim() == 256);
    CHECK(batch[0] == emb.embed_batch({"one"})[0]); // order-aligned
}

TEST_CASE("hash embedder separates disjoint token sets") {
    HashEmbedder emb(256);
    // fixed fixture pairs with no shared tokens
    const std::vector<std::pair<std::string, std::string>> pairs = {
        {"solar panels power the grid", "violin concerts delight audiences"},
        {"quarterly earnings beat estimates", "mountain trails remain snowy"},
        {"database queries timed out", "garden tomatoes ripen slowly"},
    };
    for (const auto& [a, b] : pairs) {
        auto va = emb.embed_batch({a})[0];
        auto vb = emb.embed_batch({b})[0];
        CHECK(std::abs(cosine_similarity(va, vb)) < 0.5);
    }
    // shared tokens push similarity up
    auto va = emb.embed_batch({"solar panels power the grid"})[0];
    auto vb = emb.embed_batch({"solar panels power the town"})[0];
    CHECK(cosine_similarity(va, vb) > 0.5);
}

TEST_CASE("scripted chat model replays fixtures") {
    std::string prompt = "What is the answer?";
    ScriptedChatModel llm("scripted",
                          {{sha256_hex(prompt), "", "Answer: {'source': {'$in': ['X']}}"},
                           {"", "fallback needle", "matched by substring"}});
    CompletionParams params;
    CHECK(llm.complete(prompt, params) == "Answer: {'source': {'$in': ['X']}}");
    CHECK(llm.complete("prefix fallback needle suffix", params) == "matched by substring");
    CHECK(llm.calls() == 2);

    try {
        llm.complete("unknown prompt", params);
        FAIL("expected FixtureMiss");
    } catch (const FixtureMiss& e) {
        CHECK(e.prompt_hash() == sha256_hex("unknown prompt"));
    }
}

TEST_CASE("scripted chat model loads fixture files") {
    TempDir dir("fixtures");
    testsupport::write_json(
        dir.file("obj.json"),
        nlohmann::json{{sha256_hex("p1"), "r1"}, {sha256_hex("p2"), "r2"}});
    ScriptedChatModel from_obj("m", ScriptedChatModel::load_fixtures(dir.file("obj.json")));
    CompletionParams params;
    CHECK(from_obj.complete("p1", params) == "r1");
    CHECK(from_obj.complete("p2", params) == "r2");

    testsupport::write_json(dir.file("arr.json"),
                            nlohmann::json::array({{{"prompt", "p3"}, {"response", "r3"}},
                                                   {{"contains", "needle"}, {"response", "r4"}}}));
    ScriptedChatModel from_arr("m", ScriptedChatModel::load_fixtures(dir.file("arr.json")));
    CHECK(from_arr.complete("p3", params) == "r3");
    CHECK(from_arr.complete("has needle inside", params) == "r4");

    CHECK_THROWS_AS(ScriptedChatModel::load_fixtures(dir.file("missing.json")), IoError);
}

TEST_CASE("lexical reranker") {
    LexicalReranker reranker;
    CHECK(reranker.rerank("query", {}).empty());

    std::vector<ScoredChunk> candidates = {
        {"c1", 0.9, "nothing shared here at all", {"S", "", ""}},
        {"c2", 0.1, "solar panels power grid storage", {"S", "", ""}},
        {"c3", 0.5, "solar panels appear once", {"S", "", ""}},
    };
    auto ranked = reranker.rerank("solar panels power grid storage", candidates);
    REQUIRE(ranked.size() == 3);
    CHECK(ranked[0].chunk_id == "c2"); // contains every query token
    CHECK(ranked[2].chunk_id == "c1"); // contains none
    CHECK(ranked[2].score == 0.0);

    // permutation of the input ids, nothing dropped or invented
    std::set<std::string> ids;
    for (const auto& c : ranked) ids.insert(c.chunk_id);
    CHECK(ids == std::set<std::string>{"c1", "c2", "c3"});
}

TEST_CASE("identity reranker keeps order and scores") {
    IdentityReranker reranker;
    std::vector<ScoredChunk> candidates = {{"a", 0.9, "t", {}}, {"b", 0.8, "t", {}}};
    auto out = reranker.rerank("q", candidates);
    REQUIRE(out.size() == 2);
    CHECK(out[0].chunk_id == "a");
    CHECK(out[0].score == 0.9);
}

TEST_CASE("provider config validation") {
    CHECK_THROWS_AS(ProviderConfig::from_json({{"kind", "weird"}}), ConfigError);
    CHECK_THROWS_AS(ProviderConfig::from_json({{"kind", "http"}, {"model_name", "m"}}),
                    ConfigError);
    CHECK_THROWS_AS(ProviderConfig::from_json({{"kind", "http"},
                                               {"endpoint", "http://x/v1"},
                                               {"api_key_env", "K"},
                                               {"batch_size", 0}}),
                    ConfigError);
    ProviderConfig ok = ProviderConfig::from_json(
        {{"kind", "http"}, {"endpoint", "http://x/v1"}, {"api_key_env", "K"}});
    CHECK(ok.kind == ProviderConfig::Kind::Http);
}

// ---------------------------------------------------------------------------
// HTTP providers against a local server
// ---------------------------------------------------------------------------

namespace {

struct LocalServer {
    httplib::Server server;
    std::thread thread;
    int port = 0;

    explicit LocalServer() = default;

    void start() {
        port = server.bind_to_any_port("127.0.0.1");
        REQUIRE(port > 0);
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }

    ~LocalServer() {
        server.stop();
        if (thread.joinable()) thread.join();
    }

    std::string endpoint(const std::string& path) {
        return "http://127.0.0.1:" + std::to_string(port) + path;
    }
};

ProviderConfig http_config(const std::string& endpoint, int max_retries = 3) {
    ProviderConfig cfg;
    cfg.kind = ProviderConfig::Kind::Http;
    cfg.endpoint = endpoint;
    cfg.model_name = "test-model";
    cfg.api_key_env = "MMRAG_TEST_KEY";
    cfg.max_retries = max_retries;
    cfg.retry_base_ms = 1;
    cfg.timeout_seconds = 5.0;
    return cfg;
}

} // namespace

TEST_CASE("http chat provider retries transient failures") {
    setenv("MMRAG_TEST_KEY", "sk-test", 1);
    LocalServer srv;
    std::atomic<int> hits{0};
    srv.server.Post("/v1/chat", [&](const httplib::Request& req, httplib::Response& res) {
        int n = ++hits;
        CHECK(req.get_header_value("Authorization") == "Bearer sk-test");
        if (n <= 2) {
            res.status = 503;
            res.set_content("overloaded", "text/plain");
            return;
        }
        auto body = nlohmann::json::parse(req.body);
        CHECK(body["model"] == "test-model");
        nlohmann::json reply = {
            {"choices",
             nlohmann::json::array(
                 {{{"message", {{"role", "assistant"}, {"content", "pong"}}}}})}};
        res.set_content(reply.dump(), "application/json");
    });
    srv.start();

    auto llm = make_chat_model(http_config(srv.endpoint("/v1/chat"), 3));
    CHECK(llm->complete("ping", CompletionParams{}) == "pong");
    CHECK(hits.load() == 3);
}

TEST_CASE("http chat provider fails fast on non-retryable status") {
    setenv("MMRAG_TEST_KEY", "sk-test", 1);
    LocalServer srv;
    std::atomic<int> hits{0};
    srv.server.Post("/v1/chat", [&](const httplib::Request&, httplib::Response& res) {
        ++hits;
        res.status = 400;
        res.set_content("bad request", "text/plain");
    });
    srv.start();

    auto llm = make_chat_model(http_config(srv.endpoint("/v1/chat"), 3));
    try {
        llm->complete("ping", CompletionParams{});
        FAIL("expected ProviderError");
    } catch (const ProviderError& e) {
        CHECK_FALSE(e.retryable());
        CHECK(e.status() == 400);
    }
    CHECK(hits.load() == 1);
}

TEST_CASE("http chat provider exhausts retries") {
    setenv("MMRAG_TEST_KEY", "sk-test", 1);
    LocalServer srv;
    std::atomic<int> hits{0};
    srv.server.Post("/v1/chat", [&](const httplib::Request&, httplib::Response& res) {
        ++hits;
        res.status = 500;
    });
    srv.start();

    auto llm = make_chat_model(http_config(srv.endpoint("/v1/chat"), 2));
    try {
        llm->complete("ping", CompletionParams{});
        FAIL("expected ProviderError");
    } catch (const ProviderError& e) {
        CHECK(e.retryable());
    }
    CHECK(hits.load() == 2);
}

TEST_CASE("http embedder and reranker adapters") {
    setenv("MMRAG_TEST_KEY", "sk-test", 1);
    LocalServer srv;
    srv.server.Post("/v1/embeddings", [&](const httplib::Request& req, httplib::Response& res) {
        auto body = nlohmann::json::parse(req.body);
        nlohmann::json data = nlohmann::json::array();
        for (std::size_t i = 0; i < body["input"].size(); ++i)
            data.push_back({{"embedding", {double(i), 1.0, 0.0}}});
        res.set_content(nlohmann::json{{"data", data}}.dump(), "application/json");
    });
    srv.server.Post("/v1/rerank", [&](const httplib::Request& req, httplib::Response& res) {
        auto body = nlohmann::json::parse(req.body);
        nlohmann::json results = nlohmann::json::array();
        // reverse the incoming order with descending scores
        std::size_t n = body["documents"].size();
        for (std::size_t i = 0; i < n; ++i)
            results.push_back({{"index", n - 1 - i}, {"relevance_score", double(n - i)}});
        res.set_content(nlohmann::json{{"results", results}}.dump(), "application/json");
    });
    srv.start();

    auto emb = make_embedder(http_config(srv.endpoint("/v1/embeddings")));
    auto vectors = emb->embed_batch({"a", "b"});
    REQUIRE(vectors.size() == 2);
    CHECK(vectors[0].values == std::vector<double>{0.0, 1.0, 0.0});
    CHECK(vectors[1].values == std::vector<double>{1.0, 1.0, 0.0});

    auto rr = make_reranker(http_config(srv.endpoint("/v1/rerank")));
    auto ranked = rr->rerank("q", {{"a", 0.1, "ta", {}}, {"b", 0.2, "tb", {}}});
    REQUIRE(ranked.size() == 2);
    CHECK(ranked[0].chunk_id == "b");
    CHECK(ranked[0].score == 2.0);
}

TEST_CASE("http providers require the configured key env var") {
    unsetenv("MMRAG_ABSENT_KEY");
    ProviderConfig cfg = http_config("http://127.0.0.1:9/v1/chat");
    cfg.api_key_env = "MMRAG_ABSENT_KEY";
    auto llm = make_chat_model(cfg);
    try {
        llm->complete("ping", CompletionParams{});
        FAIL("expected ProviderError");
    } catch (const ProviderError& e) {
        CHECK_FALSE(e.retryable());
    }
}
