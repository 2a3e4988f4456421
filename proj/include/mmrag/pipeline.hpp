#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mmrag/benchmark.hpp"
#include "mmrag/extractor.hpp"
#include "mmrag/ingest.hpp"
#include "mmrag/providers.hpp"
#include "mmrag/vector_store.hpp"

namespace mmrag {

struct PipelineConfig {
    int prefilter_k = 20; // candidates fetched with the metadata filter applied
    int final_k = 10;     // kept after reranking (10 for retrieval eval, 6 for generation)
    ChunkingConfig chunking;

    bool valid() const { return final_k > 0 && final_k <= prefilter_k && chunking.valid(); }
};

struct StageTimings {
    double extract_seconds = 0.0;
    double embed_seconds = 0.0;
    double search_seconds = 0.0;
    double rerank_seconds = 0.0;
    double total_seconds = 0.0;
};

struct RetrievalResult {
    std::string query_id;
    FilterExpr filter;
    bool degraded = false;      // filter matched nothing; retried unfiltered
    bool fallback_used = false; // extraction fell back to an empty filter
    std::vector<ScoredChunk> chunks; // reranked, length <= final_k
    StageTimings timings;
    std::string error; // per-query failure, empty on success
};

struct GenerationResult {
    std::string query_id;
    std::string response;
    std::vector<std::string> chunks_used;
    std::string model_name;
    std::string error;
};

// Produces the filter for a query: from cache, live extraction, or a constant
// (empty in baseline mode).
struct FilterOutcome {
    FilterExpr filter;
    bool fallback_used = false;
    double latency_seconds = 0.0;
};
using FilterSource = std::function<FilterOutcome(const BenchmarkQuery&)>;

FilterSource empty_filter_source();

// Two-stage retrieval: metadata-filtered cosine top-prefilter_k, then rerank,
// then truncate to final_k. When the filtered search matches nothing and the
// filter was non-empty, retries once unfiltered and marks the result degraded.
RetrievalResult retrieve(const BenchmarkQuery& query, const PipelineConfig& cfg,
                         const VectorStore& store, Embedder& embedder, RerankerModel& reranker,
                         const FilterSource& filter_source);

// QA prompt: fixed instruction, one context block per chunk headed by its
// source and date ("No context found." when there are none), then the
// question.
std::string build_qa_prompt(const BenchmarkQuery& query, const std::vector<ScoredChunk>& chunks);

// Provider errors surface here; generation has no silent fallback.
GenerationResult generate(const BenchmarkQuery& query, const RetrievalResult& retrieval,
                          ChatModel& llm);

// Runs fn(0..n-1) under at most `workers` threads; the result vector keeps
// input order. fn must not throw.
void run_parallel(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

nlohmann::json to_json(const RetrievalResult& r);
nlohmann::json to_json(const GenerationResult& r);
RetrievalResult retrieval_result_from_json(const nlohmann::json& j);
GenerationResult generation_result_from_json(const nlohmann::json& j);

} // namespace mmrag
