#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <memory>
#include <random>
#include <semaphore>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "mmrag/errors.hpp"
#include "mmrag/providers.hpp"

namespace mmrag {

namespace {

struct Endpoint {
    std::string base; // scheme://host[:port]
    std::string path; // leading slash
};

Endpoint split_endpoint(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw ConfigError("endpoint must be an http(s) URL: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

bool retryable_status(int status) { return status == 429 || (status >= 500 && status < 600); }

class HttpJsonClient {
public:
    explicit HttpJsonClient(ProviderConfig cfg)
        : cfg_(std::move(cfg)),
          endpoint_(split_endpoint(cfg_.endpoint)),
          in_flight_(std::max(1, cfg_.max_in_flight)) {}

    nlohmann::json post(const nlohmann::json& body) const {
        // bound concurrent requests against this provider
        in_flight_.acquire();
        struct Release {
            std::counting_semaphore<>& sem;
            ~Release() { sem.release(); }
        } release{in_flight_};

        httplib::Client client(endpoint_.base);
        client.set_connection_timeout(std::chrono::duration<double>(cfg_.timeout_seconds));
        client.set_read_timeout(std::chrono::duration<double>(cfg_.timeout_seconds));

        httplib::Headers headers;
        if (!cfg_.api_key_env.empty()) {
            const char* key = std::getenv(cfg_.api_key_env.c_str());
            if (!key || !*key)
                throw ProviderError("environment variable " + cfg_.api_key_env + " is not set",
                                    /*retryable=*/false);
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }

        const std::string payload = body.dump();
        int attempts = std::max(1, cfg_.max_retries);
        std::string last_error;
        int last_status = 0;

        for (int attempt = 0; attempt < attempts; ++attempt) {
            if (attempt > 0) backoff(attempt);
            auto res = client.Post(endpoint_.path, headers, payload, "application/json");
            if (!res) {
                last_error = "transport error: " + httplib::to_string(res.error());
                last_status = 0;
                continue; // timeouts and connection failures are retryable
            }
            if (res->status >= 200 && res->status < 300) {
                try {
                    return nlohmann::json::parse(res->body);
                } catch (const nlohmann::json::exception& e) {
                    throw ProviderError("provider returned malformed JSON: " + std::string(e.what()),
                                        /*retryable=*/false, res->status);
                }
            }
            last_status = res->status;
            last_error = "HTTP " + std::to_string(res->status) + ": " + res->body;
            if (!retryable_status(res->status))
                throw ProviderError(last_error, /*retryable=*/false, res->status);
        }
        throw ProviderError("retries exhausted after " + std::to_string(attempts) +
                                " attempts; last: " + last_error,
                            /*retryable=*/true, last_status);
    }

private:
    void backoff(int attempt) const {
        static thread_local std::mt19937 rng{std::random_device{}()};
        std::uniform_real_distribution<double> jitter(0.5, 1.0);
        double ms = double(cfg_.retry_base_ms) * double(1 << (attempt - 1)) * jitter(rng);
        std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(ms));
    }

    ProviderConfig cfg_;
    Endpoint endpoint_;
    mutable std::counting_semaphore<> in_flight_;
};

class HttpEmbedder final : public Embedder {
public:
    explicit HttpEmbedder(ProviderConfig cfg) : cfg_(cfg), client_(std::move(cfg)) {}

    std::vector<Embedding> embed_batch(const std::vector<std::string>& texts) override {
        std::vector<Embedding> out;
        out.reserve(texts.size());
        for (std::size_t begin = 0; begin < texts.size(); begin += cfg_.batch_size) {
            std::size_t end = std::min(texts.size(), begin + cfg_.batch_size);
            nlohmann::json body = {
                {"model", cfg_.model_name},
                {"input", std::vector<std::string>(texts.begin() + begin, texts.begin() + end)}};
            nlohmann::json res = client_.post(body);
            if (!res.contains("data") || !res["data"].is_array() ||
                res["data"].size() != end - begin)
                throw ProviderError("embedding response missing aligned \"data\" array",
                                    /*retryable=*/false);
            for (const auto& item : res["data"]) {
                Embedding e;
                e.values = item.at("embedding").get<std::vector<double>>();
                if (dim_ == 0) dim_ = e.values.size();
                out.push_back(std::move(e));
            }
        }
        return out;
    }

    std::size_t dim() const override { return dim_; }

private:
    ProviderConfig cfg_;
    HttpJsonClient client_;
    std::size_t dim_ = 0;
};

class HttpChatModel final : public ChatModel {
public:
    explicit HttpChatModel(ProviderConfig cfg) : cfg_(cfg), client_(std::move(cfg)) {}

    std::string complete(const std::string& prompt, const CompletionParams& params) override {
        nlohmann::json body = {
            {"model", cfg_.model_name},
            {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
            {"temperature", params.temperature},
            {"max_tokens", params.max_tokens}};
        nlohmann::json res = client_.post(body);
        try {
            return res.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception&) {
            throw ProviderError("chat response missing choices[0].message.content",
                                /*retryable=*/false);
        }
    }

    const std::string& model_name() const override { return cfg_.model_name; }

private:
    ProviderConfig cfg_;
    HttpJsonClient client_;
};

class HttpReranker final : public RerankerModel {
public:
    explicit HttpReranker(ProviderConfig cfg) : cfg_(cfg), client_(std::move(cfg)) {}

    std::vector<ScoredChunk> rerank(const std::string& query,
                                    std::vector<ScoredChunk> candidates) override {
        if (candidates.empty()) return candidates;
        nlohmann::json docs = nlohmann::json::array();
        for (const auto& c : candidates) docs.push_back(c.text);
        nlohmann::json body = {{"model", cfg_.model_name},
                               {"query", query},
                               {"documents", std::move(docs)},
                               {"top_n", candidates.size()}};
        nlohmann::json res = client_.post(body);
        if (!res.contains("results") || !res["results"].is_array())
            throw ProviderError("rerank response missing \"results\" array", /*retryable=*/false);
        for (const auto& item : res["results"]) {
            std::size_t index = item.at("index").get<std::size_t>();
            if (index >= candidates.size())
                throw ProviderError("rerank response index out of range", /*retryable=*/false);
            candidates[index].score = item.at("relevance_score").get<double>();
        }
        std::sort(candidates.begin(), candidates.end(),
                  [](const ScoredChunk& a, const ScoredChunk& b) {
                      if (a.score != b.score) return a.score > b.score;
                      return a.chunk_id < b.chunk_id;
                  });
        return candidates;
    }

private:
    ProviderConfig cfg_;
    HttpJsonClient client_;
};

} // namespace

std::unique_ptr<Embedder> make_http_embedder(const ProviderConfig& cfg) {
    return std::make_unique<HttpEmbedder>(cfg);
}

std::unique_ptr<ChatModel> make_http_chat_model(const ProviderConfig& cfg) {
    return std::make_unique<HttpChatModel>(cfg);
}

std::unique_ptr<RerankerModel> make_http_reranker(const ProviderConfig& cfg) {
    return std::make_unique<HttpReranker>(cfg);
}

} // namespace mmrag
