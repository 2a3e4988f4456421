#include "mmrag/providers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include "mmrag/errors.hpp"
#include "mmrag/hash.hpp"

namespace mmrag {

ProviderConfig ProviderConfig::from_json(const nlohmann::json& j) {
    ProviderConfig cfg;
    std::string kind = j.value("kind", "local");
    if (kind == "local") {
        cfg.kind = Kind::Local;
    } else if (kind == "http") {
        cfg.kind = Kind::Http;
    } else {
        throw ConfigError("provider kind must be \"local\" or \"http\", got \"" + kind + "\"");
    }
    cfg.model_name = j.value("model_name", std::string{});
    cfg.endpoint = j.value("endpoint", std::string{});
    cfg.api_key_env = j.value("api_key_env", std::string{});
    cfg.timeout_seconds = j.value("timeout", 30.0);
    cfg.max_retries = j.value("max_retries", 3);
    cfg.batch_size = j.value("batch_size", 16);
    cfg.retry_base_ms = j.value("retry_base_ms", 200);
    cfg.max_in_flight = j.value("max_in_flight", 8);
    cfg.dim = j.value("dim", std::size_t{256});
    cfg.fixtures_path = j.value("fixtures", std::string{});

    if (cfg.kind == Kind::Http) {
        if (cfg.endpoint.empty()) throw ConfigError("http provider requires \"endpoint\"");
        if (cfg.api_key_env.empty()) throw ConfigError("http provider requires \"api_key_env\"");
    }
    if (cfg.batch_size < 1) throw ConfigError("provider batch_size must be >= 1");
    return cfg;
}

nlohmann::json ProviderConfig::to_json() const {
    nlohmann::json j;
    j["kind"] = kind == Kind::Local ? "local" : "http";
    j["model_name"] = model_name;
    if (!endpoint.empty()) j["endpoint"] = endpoint;
    if (!api_key_env.empty()) j["api_key_env"] = api_key_env;
    j["timeout"] = timeout_seconds;
    j["max_retries"] = max_retries;
    j["batch_size"] = batch_size;
    j["dim"] = dim;
    if (!fixtures_path.empty()) j["fixtures"] = fixtures_path;
    return j;
}

// ---------------------------------------------------------------------------
// HashEmbedder
// ---------------------------------------------------------------------------

HashEmbedder::HashEmbedder(std::size_t dim) : dim_(dim) {
    if (dim_ == 0) throw ConfigError("embedder dim must be positive");
}

Embedding HashEmbedder::embed(const std::string& text) const {
    Embedding e;
    e.values.assign(dim_, 0.0);
    for (const auto& token : tokenizer_.tokenize(text)) {
        std::uint64_t h = fnv1a64(token);
        double sign = (h >> 63) ? -1.0 : 1.0;
        e.values[h % dim_] += sign;
    }
    double norm = 0.0;
    for (double v : e.values) norm += v * v;
    if (norm > 0.0) {
        norm = std::sqrt(norm);
        for (double& v : e.values) v /= norm;
    }
    return e;
}

std::vector<Embedding> HashEmbedder::embed_batch(const std::vector<std::string>& texts) {
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed(t));
    return out;
}

// ---------------------------------------------------------------------------
// ScriptedChatModel
// ---------------------------------------------------------------------------

ScriptedChatModel::ScriptedChatModel(std::string model_name, std::vector<Fixture> fixtures)
    : model_name_(std::move(model_name)), fixtures_(std::move(fixtures)) {}

std::vector<ScriptedChatModel::Fixture> ScriptedChatModel::load_fixtures(
    const std::filesystem::path& fixtures_path) {
    std::ifstream in(fixtures_path);
    if (!in) throw IoError("cannot open fixtures file: " + fixtures_path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("fixtures file " + fixtures_path.string() + " is not valid JSON: " + e.what());
    }

    std::vector<Fixture> fixtures;
    if (j.is_object()) {
        for (const auto& [hash, response] : j.items())
            fixtures.push_back(Fixture{hash, "", response.get<std::string>()});
    } else if (j.is_array()) {
        for (const auto& rec : j) {
            Fixture f;
            if (rec.contains("prompt")) f.prompt_sha256 = sha256_hex(rec["prompt"].get<std::string>());
            if (rec.contains("prompt_sha256")) f.prompt_sha256 = rec["prompt_sha256"].get<std::string>();
            if (rec.contains("contains")) f.contains = rec["contains"].get<std::string>();
            if (!rec.contains("response"))
                throw ConfigError("fixture record without \"response\" in " + fixtures_path.string());
            f.response = rec["response"].get<std::string>();
            fixtures.push_back(std::move(f));
        }
    } else {
        throw ConfigError("fixtures file must hold a JSON object or array");
    }
    return fixtures;
}

std::string ScriptedChatModel::complete(const std::string& prompt, const CompletionParams&) {
    calls_.fetch_add(1);
    std::string h = sha256_hex(prompt);
    for (const auto& f : fixtures_) {
        if (!f.prompt_sha256.empty() && f.prompt_sha256 == h) return f.response;
    }
    for (const auto& f : fixtures_) {
        if (!f.contains.empty() && prompt.find(f.contains) != std::string::npos) return f.response;
    }
    throw FixtureMiss(h);
}

// ---------------------------------------------------------------------------
// Rerankers
// ---------------------------------------------------------------------------

std::vector<ScoredChunk> LexicalReranker::rerank(const std::string& query,
                                                 std::vector<ScoredChunk> candidates) {
    const std::size_t n = candidates.size();
    if (n == 0) return candidates;

    std::vector<std::unordered_set<std::string>> chunk_tokens;
    chunk_tokens.reserve(n);
    std::unordered_map<std::string, std::size_t> doc_freq;
    for (const auto& c : candidates) {
        auto toks = tokenizer_.tokenize(c.text);
        std::unordered_set<std::string> set(toks.begin(), toks.end());
        for (const auto& t : set) ++doc_freq[t];
        chunk_tokens.push_back(std::move(set));
    }

    auto query_tokens = tokenizer_.tokenize(query);
    std::unordered_set<std::string> query_set(query_tokens.begin(), query_tokens.end());

    for (std::size_t i = 0; i < n; ++i) {
        double score = 0.0;
        for (const auto& t : query_set) {
            if (!chunk_tokens[i].count(t)) continue;
            std::size_t df = doc_freq[t];
            score += std::log(double(n + 1) / double(df + 1)) + 1.0;
        }
        candidates[i].score = score;
    }
    std::sort(candidates.begin(), candidates.end(), [](const ScoredChunk& a, const ScoredChunk& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.chunk_id < b.chunk_id;
    });
    return candidates;
}

std::vector<ScoredChunk> IdentityReranker::rerank(const std::string&,
                                                  std::vector<ScoredChunk> candidates) {
    return candidates;
}

// ---------------------------------------------------------------------------
// Factories (http implementations live in http_providers.cpp)
// ---------------------------------------------------------------------------

std::unique_ptr<Embedder> make_http_embedder(const ProviderConfig& cfg);
std::unique_ptr<ChatModel> make_http_chat_model(const ProviderConfig& cfg);
std::unique_ptr<RerankerModel> make_http_reranker(const ProviderConfig& cfg);

std::unique_ptr<Embedder> make_embedder(const ProviderConfig& cfg) {
    if (cfg.kind == ProviderConfig::Kind::Http) return make_http_embedder(cfg);
    return std::make_unique<HashEmbedder>(cfg.dim);
}

std::unique_ptr<ChatModel> make_chat_model(const ProviderConfig& cfg) {
    if (cfg.kind == ProviderConfig::Kind::Http) return make_http_chat_model(cfg);
    if (cfg.fixtures_path.empty())
        throw ConfigError("local chat model \"" + cfg.model_name + "\" requires \"fixtures\"");
    return std::make_unique<ScriptedChatModel>(
        cfg.model_name, ScriptedChatModel::load_fixtures(cfg.fixtures_path));
}

std::unique_ptr<RerankerModel> make_reranker(const ProviderConfig& cfg) {
    if (cfg.kind == ProviderConfig::Kind::Http) return make_http_reranker(cfg);
    if (cfg.model_name == "identity") return std::make_unique<IdentityReranker>();
    return std::make_unique<LexicalReranker>();
}

} // namespace mmrag
