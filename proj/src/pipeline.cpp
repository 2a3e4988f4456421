#include "mmrag/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <thread>

#include "mmrag/errors.hpp"

namespace mmrag {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

} // namespace

FilterSource empty_filter_source() {
    return [](const BenchmarkQuery&) { return FilterOutcome{}; };
}

RetrievalResult retrieve(const BenchmarkQuery& query, const PipelineConfig& cfg,
                         const VectorStore& store, Embedder& embedder, RerankerModel& reranker,
                         const FilterSource& filter_source) {
    if (!cfg.valid()) throw ConfigError("pipeline config requires 0 < final_k <= prefilter_k");

    RetrievalResult result;
    result.query_id = query.query_id;
    auto run_start = Clock::now();

    auto stage = Clock::now();
    FilterOutcome outcome = filter_source(query);
    result.filter = std::move(outcome.filter);
    result.fallback_used = outcome.fallback_used;
    result.timings.extract_seconds =
        outcome.latency_seconds > 0.0 ? outcome.latency_seconds : seconds_since(stage);

    stage = Clock::now();
    Embedding query_embedding = embedder.embed_batch({query.query}).at(0);
    result.timings.embed_seconds = seconds_since(stage);

    stage = Clock::now();
    auto candidates = store.search(query_embedding, result.filter,
                                   static_cast<std::size_t>(cfg.prefilter_k));
    if (candidates.empty() && !result.filter.empty()) {
        // an over-restrictive filter must not starve generation of context
        result.degraded = true;
        candidates = store.search(query_embedding, FilterExpr{},
                                  static_cast<std::size_t>(cfg.prefilter_k));
    }
    result.timings.search_seconds = seconds_since(stage);

    stage = Clock::now();
    auto reranked = reranker.rerank(query.query, std::move(candidates));
    if (reranked.size() > static_cast<std::size_t>(cfg.final_k))
        reranked.resize(static_cast<std::size_t>(cfg.final_k));
    result.chunks = std::move(reranked);
    result.timings.rerank_seconds = seconds_since(stage);

    result.timings.total_seconds = seconds_since(run_start);
    return result;
}

std::string build_qa_prompt(const BenchmarkQuery& query, const std::vector<ScoredChunk>& chunks) {
    std::string prompt =
        "Answer the question based only on the context below. If the context is insufficient, "
        "answer 'Insufficient information.'\n\nContext:\n";
    if (chunks.empty()) {
        prompt += "No context found.\n";
    } else {
        for (std::size_t i = 0; i < chunks.size(); ++i) {
            prompt += "[" + std::to_string(i + 1) + "] (source: " + chunks[i].metadata.source;
            if (!chunks[i].metadata.published_at.empty())
                prompt += ", published_at: " + chunks[i].metadata.published_at;
            prompt += ")\n";
            prompt += chunks[i].text;
            prompt += "\n\n";
        }
    }
    prompt += "\nQuestion: ";
    prompt += query.query;
    prompt += "\nAnswer:";
    return prompt;
}

GenerationResult generate(const BenchmarkQuery& query, const RetrievalResult& retrieval,
                          ChatModel& llm) {
    GenerationResult result;
    result.query_id = query.query_id;
    result.model_name = llm.model_name();
    for (const auto& c : retrieval.chunks) result.chunks_used.push_back(c.chunk_id);

    CompletionParams params;
    params.temperature = 0.0;
    result.response = llm.complete(build_qa_prompt(query, retrieval.chunks), params);
    return result;
}

void run_parallel(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    std::size_t pool = std::max(1, workers);
    pool = std::min(pool, n);
    if (pool == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::vector<std::thread> threads;
    threads.reserve(pool);
    for (std::size_t t = 0; t < pool; ++t) {
        threads.emplace_back([&] {
            while (true) {
                std::size_t i = next.fetch_add(1);
                if (i >= n) break;
                fn(i);
            }
        });
    }
    for (auto& th : threads) th.join();
}

namespace {

nlohmann::json scored_chunk_to_json(const ScoredChunk& c) {
    return {{"chunk_id", c.chunk_id},
            {"score", c.score},
            {"text", c.text},
            {"metadata",
             {{"source", c.metadata.source},
              {"published_at", c.metadata.published_at},
              {"title", c.metadata.title}}}};
}

ScoredChunk scored_chunk_from_json(const nlohmann::json& j) {
    ScoredChunk c;
    c.chunk_id = j.value("chunk_id", std::string{});
    c.score = j.value("score", 0.0);
    c.text = j.value("text", std::string{});
    if (j.contains("metadata")) {
        const auto& m = j["metadata"];
        c.metadata.source = m.value("source", std::string{});
        c.metadata.published_at = m.value("published_at", std::string{});
        c.metadata.title = m.value("title", std::string{});
    }
    return c;
}

} // namespace

nlohmann::json to_json(const RetrievalResult& r) {
    nlohmann::json chunks = nlohmann::json::array();
    for (const auto& c : r.chunks) chunks.push_back(scored_chunk_to_json(c));
    return {{"query_id", r.query_id},
            {"filter", to_json(r.filter)},
            {"degraded", r.degraded},
            {"fallback_used", r.fallback_used},
            {"chunks", std::move(chunks)},
            {"timings",
             {{"extract_seconds", r.timings.extract_seconds},
              {"embed_seconds", r.timings.embed_seconds},
              {"search_seconds", r.timings.search_seconds},
              {"rerank_seconds", r.timings.rerank_seconds},
              {"total_seconds", r.timings.total_seconds}}},
            {"error", r.error}};
}

nlohmann::json to_json(const GenerationResult& r) {
    return {{"query_id", r.query_id},
            {"response", r.response},
            {"chunks_used", r.chunks_used},
            {"model_name", r.model_name},
            {"error", r.error}};
}

RetrievalResult retrieval_result_from_json(const nlohmann::json& j) {
    RetrievalResult r;
    r.query_id = j.value("query_id", std::string{});
    if (j.contains("filter")) r.filter = filter_from_json(j["filter"]);
    r.degraded = j.value("degraded", false);
    r.fallback_used = j.value("fallback_used", false);
    if (j.contains("chunks")) {
        for (const auto& c : j["chunks"]) r.chunks.push_back(scored_chunk_from_json(c));
    }
    if (j.contains("timings")) {
        const auto& t = j["timings"];
        r.timings.extract_seconds = t.value("extract_seconds", 0.0);
        r.timings.embed_seconds = t.value("embed_seconds", 0.0);
        r.timings.search_seconds = t.value("search_seconds", 0.0);
        r.timings.rerank_seconds = t.value("rerank_seconds", 0.0);
        r.timings.total_seconds = t.value("total_seconds", 0.0);
    }
    r.error = j.value("error", std::string{});
    return r;
}

GenerationResult generation_result_from_json(const nlohmann::json& j) {
    GenerationResult r;
    r.query_id = j.value("query_id", std::string{});
    r.response = j.value("response", std::string{});
    if (j.contains("chunks_used"))
        r.chunks_used = j["chunks_used"].get<std::vector<std::string>>();
    r.model_name = j.value("model_name", std::string{});
    r.error = j.value("error", std::string{});
    return r;
}

} // namespace mmrag
