#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmrag/pipeline.hpp"
#include "mmrag/providers.hpp"

namespace mmrag {

// Resolved run configuration: file paths, pipeline knobs, provider configs,
// and the mode flags. Built from a single JSON document; CLI flags override
// individual fields before parsing.
struct RunConfig {
    std::filesystem::path corpus;
    std::filesystem::path queries;
    std::filesystem::path store;
    std::filesystem::path filter_cache;
    std::filesystem::path results_dir;
    std::string body_key = "body";
    std::vector<std::string> source_catalog; // optional; derived from the corpus when empty

    PipelineConfig pipeline;  // prefilter_k / final_k / chunking
    int generation_k = 6;
    int workers = 4;
    bool baseline = false;        // disable filtering everywhere
    bool with_baseline = false;   // eval-retrieval: also score a baseline run side by side
    bool strict_accuracy = false; // raw any-word accuracy rule

    ProviderConfig embedder;
    ProviderConfig reranker;
    ProviderConfig extractor_llm;
    ProviderConfig generator_llm;
    bool has_extractor_llm = false;
    bool has_generator_llm = false;

    static RunConfig from_json(const nlohmann::json& j);

private:
    static RunConfig from_json_checked(const nlohmann::json& j);
};

// Command entry points; each returns the report it also writes under
// results_dir. Errors are thrown (see errors.hpp); the C API and CLI map them
// onto error/exit codes.
nlohmann::json cmd_ingest(const RunConfig& cfg);
nlohmann::json cmd_extract(const RunConfig& cfg);
nlohmann::json cmd_retrieve(const RunConfig& cfg);
nlohmann::json cmd_eval_retrieval(const RunConfig& cfg);
nlohmann::json cmd_generate(const RunConfig& cfg);
nlohmann::json cmd_eval_generation(const RunConfig& cfg);

// Dispatch by CLI subcommand name; throws ConfigError for unknown commands.
nlohmann::json run_command(const std::string& command, const nlohmann::json& config);

} // namespace mmrag
