#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mmrag/benchmark.hpp"
#include "mmrag/pipeline.hpp"

namespace mmrag {

// Lowercase, strip punctuation, collapse whitespace; the comparison space for
// chunk/evidence matching.
std::string normalize_for_match(std::string_view text);

// A chunk supports an evidence item iff the sources agree and the normalized
// fact occurs inside the normalized chunk text.
bool is_relevant(const ScoredChunk& chunk, const Evidence& evidence);

struct RetrievalMetrics {
    double mrr_at_k = 0.0;
    double map_at_k = 0.0;
    double hit_at_k = 0.0;
    double hit_at_4 = 0.0;
    int k = 0;
    std::size_t n_queries = 0; // scored (non-null) queries
};

// Null queries are excluded throughout; EmptyQuerySet when nothing remains.
// Results align to queries by query_id (AlignmentError otherwise).
double mrr_at_k(const std::vector<RetrievalResult>& results,
                const std::vector<BenchmarkQuery>& queries, int k);
double map_at_k(const std::vector<RetrievalResult>& results,
                const std::vector<BenchmarkQuery>& queries, int k);
double hit_at_k(const std::vector<RetrievalResult>& results,
                const std::vector<BenchmarkQuery>& queries, int k);

RetrievalMetrics retrieval_metrics(const std::vector<RetrievalResult>& results,
                                   const std::vector<BenchmarkQuery>& queries, int k);

struct AccuracyReport {
    double overall = 0.0;
    std::map<QuestionType, double> by_type;      // every question type present
    std::map<QuestionType, std::size_t> counts;
    std::size_t n_queries = 0;
};

// A response is correct when it shares a normalized word with the gold
// answer. The default rule drops a small stop-word set first; strict mode
// applies the raw any-word rule.
AccuracyReport accuracy(const std::vector<GenerationResult>& responses,
                        const std::vector<BenchmarkQuery>& queries, bool strict = false);

} // namespace mmrag
