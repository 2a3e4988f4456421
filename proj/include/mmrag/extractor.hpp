#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mmrag/benchmark.hpp"
#include "mmrag/filter_engine.hpp"
#include "mmrag/providers.hpp"

namespace mmrag {

// Few-shot prompt for query-metadata extraction: instruction, the closed
// source catalog, worked question/answer pairs, and a closing instruction.
struct PromptTemplate {
    std::string instruction;
    std::vector<std::string> source_catalog;
    std::vector<std::pair<std::string, std::string>> examples; // (question, answer filter)
    std::string suffix;

    // The stock template with its three worked examples, parameterized by the
    // catalog of valid outlet names.
    static PromptTemplate standard(std::vector<std::string> catalog);
};

// Deterministic rendering; always ends with "Question: <query>\nAnswer:".
std::string build_prompt(const PromptTemplate& tmpl, std::string_view query);

struct ExtractionRecord {
    std::string query_id;
    std::string model_name;
    std::string prompt_sha256;
    std::string raw_response;
    RawFilter raw_filter;
    FilterExpr filter;
    double latency_seconds = 0.0;
    bool fallback_used = false;
    std::string fallback_reason; // "", "parse", or "provider"
};

// One extraction: render prompt, call the model at temperature 0, parse and
// normalize. Parsing or provider failure downgrades to an empty filter with
// fallback_used set; this never throws.
ExtractionRecord extract(const std::string& query_id, const std::string& query, ChatModel& llm,
                         const PromptTemplate& tmpl, const std::vector<std::string>& catalog);

struct ExtractionStats {
    double pct_with_source = 0.0;
    double pct_with_date = 0.0;
    double pct_temporal_queries = 0.0;
    double mean_latency_seconds = 0.0;
    std::size_t n_records = 0;
    bool empty = true;
};

// Percentages over all records/queries (0..100). Records and queries must
// align by query_id; AlignmentError otherwise.
ExtractionStats filter_stats(const std::vector<ExtractionRecord>& records,
                             const std::vector<BenchmarkQuery>& queries);

nlohmann::json to_json(const ExtractionRecord& rec);
ExtractionRecord extraction_record_from_json(const nlohmann::json& j);

// Append-only JSONL cache keyed by (model_name, prompt hash). Warm entries
// make re-runs free of provider calls. Lookups return copies so concurrent
// appends cannot invalidate them.
class FilterCache {
public:
    explicit FilterCache(std::filesystem::path path);

    std::optional<ExtractionRecord> find(const std::string& model_name,
                                         const std::string& prompt_sha256) const;
    void append(const ExtractionRecord& rec);

    std::size_t size() const;
    std::vector<ExtractionRecord> records() const;

private:
    std::filesystem::path path_;
    std::vector<ExtractionRecord> records_;
    mutable std::mutex mutex_;
};

} // namespace mmrag
