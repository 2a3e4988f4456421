#pragma once

#include <atomic>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmrag/tokenizer.hpp"
#include "mmrag/vector_store.hpp"

namespace mmrag {

struct CompletionParams {
    double temperature = 0.0;
    int max_tokens = 512;
};

struct ProviderConfig {
    enum class Kind { Local, Http };

    Kind kind = Kind::Local;
    std::string model_name;
    std::string endpoint;    // http only
    std::string api_key_env; // name of the env var holding the key, never the key itself
    double timeout_seconds = 30.0;
    int max_retries = 3;
    int batch_size = 16;
    int retry_base_ms = 200;
    int max_in_flight = 8; // concurrent request bound per http provider

    // local providers
    std::size_t dim = 256;      // hash embedder
    std::string fixtures_path;  // scripted chat model

    static ProviderConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

class Embedder {
public:
    virtual ~Embedder() = default;

    // One embedding per text, order-aligned, all with the same dimension.
    virtual std::vector<Embedding> embed_batch(const std::vector<std::string>& texts) = 0;
    virtual std::size_t dim() const = 0;
};

class ChatModel {
public:
    virtual ~ChatModel() = default;

    virtual std::string complete(const std::string& prompt, const CompletionParams& params) = 0;
    virtual const std::string& model_name() const = 0;
};

class RerankerModel {
public:
    virtual ~RerankerModel() = default;

    // Same chunk set back, re-scored and re-sorted (score desc, chunk_id asc).
    virtual std::vector<ScoredChunk> rerank(const std::string& query,
                                            std::vector<ScoredChunk> candidates) = 0;
};

// Deterministic embedding provider: every token adds +-1 (sign taken from one
// bit of its 64-bit FNV-1a hash) to dimension hash % dim; the result is
// L2-normalized. Texts sharing no tokens land nearly orthogonal, which is all
// the offline pipeline needs.
class HashEmbedder final : public Embedder {
public:
    explicit HashEmbedder(std::size_t dim = 256);

    std::vector<Embedding> embed_batch(const std::vector<std::string>& texts) override;
    std::size_t dim() const override { return dim_; }

    Embedding embed(const std::string& text) const;

private:
    std::size_t dim_;
    DefaultTokenizer tokenizer_;
};

// Replays canned responses. A fixture matches by the SHA-256 of the exact
// prompt, or (fallback) by a substring the prompt must contain; anything else
// raises FixtureMiss with the prompt hash so the fixture can be added.
class ScriptedChatModel final : public ChatModel {
public:
    struct Fixture {
        std::string prompt_sha256; // exact-match key, may be empty
        std::string contains;      // substring key, may be empty
        std::string response;
    };

    ScriptedChatModel(std::string model_name, std::vector<Fixture> fixtures);

    // Loads a fixture JSON file: either an object {sha256: response, ...} or
    // an array of {prompt | prompt_sha256 | contains, response} records.
    static std::vector<Fixture> load_fixtures(const std::filesystem::path& fixtures_path);

    std::string complete(const std::string& prompt, const CompletionParams& params) override;
    const std::string& model_name() const override { return model_name_; }

    std::size_t calls() const { return calls_.load(); }

private:
    std::string model_name_;
    std::vector<Fixture> fixtures_;
    std::atomic<std::size_t> calls_{0};
};

// Lexical reranker: scores a candidate by the sum of IDF weights of the
// distinct query tokens it contains, IDF computed over the candidate set.
class LexicalReranker final : public RerankerModel {
public:
    std::vector<ScoredChunk> rerank(const std::string& query,
                                    std::vector<ScoredChunk> candidates) override;

private:
    DefaultTokenizer tokenizer_;
};

// Keeps candidate scores untouched; degenerate staging for tests.
class IdentityReranker final : public RerankerModel {
public:
    std::vector<ScoredChunk> rerank(const std::string& query,
                                    std::vector<ScoredChunk> candidates) override;
};

// Config-driven construction. Http kinds talk JSON over HTTP(S) with
// retry/backoff; the API key is read from the environment variable named in
// the config at call time.
std::unique_ptr<Embedder> make_embedder(const ProviderConfig& cfg);
std::unique_ptr<ChatModel> make_chat_model(const ProviderConfig& cfg);
std::unique_ptr<RerankerModel> make_reranker(const ProviderConfig& cfg);

} // namespace mmrag
