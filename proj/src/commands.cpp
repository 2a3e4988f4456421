#include "mmrag/commands.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <mutex>
#include <optional>
#include <unordered_set>

#include "mmrag/errors.hpp"
#include "mmrag/evaluation.hpp"
#include "mmrag/extractor.hpp"
#include "mmrag/hash.hpp"
#include "mmrag/ingest.hpp"

namespace mmrag {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void require_path(const std::filesystem::path& p, const char* field) {
    if (p.empty()) throw ConfigError(std::string("config field \"") + field + "\" is required");
    if (!std::filesystem::exists(p))
        throw ConfigError(std::string(field) + " path does not exist: " + p.string());
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

std::filesystem::path results_path(const RunConfig& cfg, const std::string& name) {
    if (cfg.results_dir.empty()) throw ConfigError("config field \"results_dir\" is required");
    std::filesystem::create_directories(cfg.results_dir);
    return cfg.results_dir / name;
}

std::filesystem::path cache_path(const RunConfig& cfg) {
    if (!cfg.filter_cache.empty()) return cfg.filter_cache;
    return results_path(cfg, "filter_cache.jsonl");
}

std::vector<std::string> derive_catalog(const RunConfig& cfg) {
    if (!cfg.source_catalog.empty()) return cfg.source_catalog;
    require_path(cfg.corpus, "corpus");
    std::vector<std::string> catalog;
    std::unordered_set<std::string> seen;
    for (const auto& doc : load_corpus(cfg.corpus, cfg.body_key)) {
        if (seen.insert(doc.source).second) catalog.push_back(doc.source);
    }
    if (catalog.empty()) throw ConfigError("source catalog is empty; corpus has no sources");
    return catalog;
}

template <typename T>
void write_jsonl(const std::filesystem::path& path, const std::vector<T>& items) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& item : items) out << to_json(item).dump() << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

// Shared filter machinery for retrieval-style commands: cache lookups backed
// by live extraction, with the extractor model created on first miss.
class FilterService {
public:
    FilterService(const RunConfig& cfg, std::vector<std::string> catalog)
        : cfg_(cfg),
          catalog_(std::move(catalog)),
          tmpl_(PromptTemplate::standard(catalog_)),
          cache_(cache_path(cfg)) {}

    FilterSource source() {
        return [this](const BenchmarkQuery& q) {
            auto looked = lookup(q);
            return FilterOutcome{std::move(looked.record.filter), looked.record.fallback_used,
                                 looked.record.latency_seconds};
        };
    }

    struct Looked {
        ExtractionRecord record;
        bool cache_hit = false;
    };

    Looked lookup(const BenchmarkQuery& q) {
        const std::string prompt = build_prompt(tmpl_, q.query);
        const std::string hash = sha256_hex(prompt);
        if (auto rec = cache_.find(model_name(), hash)) {
            rec->query_id = q.query_id;
            return Looked{std::move(*rec), true};
        }
        ExtractionRecord rec = extract(q.query_id, q.query, llm(), tmpl_, catalog_);
        // parse fallbacks are deterministic and worth caching; provider
        // failures are transient and must stay retryable
        if (rec.fallback_reason != "provider") cache_.append(rec);
        return Looked{std::move(rec), false};
    }

    FilterCache& cache() { return cache_; }
    const std::vector<std::string>& catalog() const { return catalog_; }
    const PromptTemplate& prompt_template() const { return tmpl_; }

private:
    std::string model_name() const {
        if (cfg_.has_extractor_llm) return cfg_.extractor_llm.model_name;
        return "scripted";
    }

    ChatModel& llm() {
        std::lock_guard lock(llm_mutex_);
        if (!llm_) {
            if (!cfg_.has_extractor_llm)
                throw ConfigError(
                    "providers.extractor_llm is required (filter cache does not cover the run)");
            llm_ = make_chat_model(cfg_.extractor_llm);
        }
        return *llm_;
    }

    const RunConfig& cfg_;
    std::vector<std::string> catalog_;
    PromptTemplate tmpl_;
    FilterCache cache_;
    std::unique_ptr<ChatModel> llm_;
    std::mutex llm_mutex_;
};

std::vector<RetrievalResult> run_retrieval(const RunConfig& cfg,
                                           const std::vector<BenchmarkQuery>& queries,
                                           const VectorStore& store, int final_k, bool baseline,
                                           FilterService* filters) {
    PipelineConfig pconf = cfg.pipeline;
    pconf.final_k = final_k;

    auto embedder = make_embedder(cfg.embedder);
    auto reranker = make_reranker(cfg.reranker);
    if (!baseline && !filters) throw ConfigError("filter service missing for filtered run");
    FilterSource filter_source = baseline ? empty_filter_source() : filters->source();

    std::vector<RetrievalResult> results(queries.size());
    run_parallel(queries.size(), cfg.workers, [&](std::size_t i) {
        try {
            results[i] = retrieve(queries[i], pconf, store, *embedder, *reranker, filter_source);
        } catch (const std::exception& e) {
            results[i].query_id = queries[i].query_id;
            results[i].error = e.what();
        }
    });
    return results;
}

nlohmann::json metrics_json(const RetrievalMetrics& m) {
    nlohmann::json j;
    const std::string k = std::to_string(m.k);
    j["mrr_at_" + k] = m.mrr_at_k;
    j["map_at_" + k] = m.map_at_k;
    j["hits_at_" + k] = m.hit_at_k;
    j["hits_at_4"] = m.hit_at_4;
    return j;
}

nlohmann::json stats_json(const ExtractionStats& s) {
    return {{"pct_with_source", s.pct_with_source},
            {"pct_with_date", s.pct_with_date},
            {"pct_temporal_queries", s.pct_temporal_queries},
            {"mean_latency_seconds", s.mean_latency_seconds},
            {"n_records", s.n_records},
            {"empty", s.empty}};
}

} // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    try {
        return from_json_checked(j);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed config value: ") + e.what());
    }
}

RunConfig RunConfig::from_json_checked(const nlohmann::json& j) {
    RunConfig cfg;
    cfg.corpus = j.value("corpus", std::string{});
    cfg.queries = j.value("queries", std::string{});
    cfg.store = j.value("store", std::string{});
    cfg.filter_cache = j.value("filter_cache", std::string{});
    cfg.results_dir = j.value("results_dir", std::string{});
    cfg.body_key = j.value("body_key", std::string{"body"});
    if (j.contains("source_catalog"))
        cfg.source_catalog = j["source_catalog"].get<std::vector<std::string>>();

    cfg.pipeline.prefilter_k = j.value("prefilter_k", 20);
    cfg.pipeline.final_k = j.value("final_k", 10);
    cfg.generation_k = j.value("generation_k", 6);
    if (j.contains("chunking")) {
        cfg.pipeline.chunking.chunk_size = j["chunking"].value("chunk_size", 256);
        cfg.pipeline.chunking.chunk_overlap = j["chunking"].value("chunk_overlap", 32);
    }
    if (!cfg.pipeline.chunking.valid())
        throw ConfigError("chunking requires 0 <= chunk_overlap < chunk_size");
    if (cfg.pipeline.final_k <= 0 || cfg.pipeline.final_k > cfg.pipeline.prefilter_k)
        throw ConfigError("config requires 0 < final_k <= prefilter_k");
    if (cfg.generation_k <= 0 || cfg.generation_k > cfg.pipeline.prefilter_k)
        throw ConfigError("config requires 0 < generation_k <= prefilter_k");

    cfg.workers = j.value("workers", 4);
    if (cfg.workers < 1) throw ConfigError("workers must be >= 1");
    cfg.baseline = j.value("baseline", false);
    cfg.with_baseline = j.value("with_baseline", false);
    cfg.strict_accuracy = j.value("strict_accuracy", false);

    cfg.embedder.model_name = "hash";
    cfg.reranker.model_name = "lexical";
    if (j.contains("providers")) {
        const auto& p = j["providers"];
        if (p.contains("embedder")) cfg.embedder = ProviderConfig::from_json(p["embedder"]);
        if (p.contains("reranker")) cfg.reranker = ProviderConfig::from_json(p["reranker"]);
        if (p.contains("extractor_llm")) {
            cfg.extractor_llm = ProviderConfig::from_json(p["extractor_llm"]);
            cfg.has_extractor_llm = true;
        }
        if (p.contains("generator_llm")) {
            cfg.generator_llm = ProviderConfig::from_json(p["generator_llm"]);
            cfg.has_generator_llm = true;
        }
    }
    return cfg;
}

nlohmann::json cmd_ingest(const RunConfig& cfg) {
    auto start = Clock::now();
    require_path(cfg.corpus, "corpus");
    if (cfg.store.empty()) throw ConfigError("config field \"store\" is required");

    auto docs = load_corpus(cfg.corpus, cfg.body_key);

    std::vector<Chunk> chunks;
    DefaultTokenizer tokenizer;
    for (const auto& doc : docs) {
        auto dc = chunk_document(doc, cfg.pipeline.chunking, tokenizer);
        chunks.insert(chunks.end(), std::make_move_iterator(dc.begin()),
                      std::make_move_iterator(dc.end()));
    }

    auto embedder = make_embedder(cfg.embedder);
    std::vector<std::string> texts;
    texts.reserve(chunks.size());
    for (const auto& c : chunks) texts.push_back(c.text);

    VectorStore store;
    if (!texts.empty()) {
        auto embeddings = embedder->embed_batch(texts);
        std::vector<IndexEntry> entries;
        entries.reserve(chunks.size());
        for (std::size_t i = 0; i < chunks.size(); ++i) {
            entries.push_back(IndexEntry{chunks[i].chunk_id, std::move(embeddings[i]),
                                         chunks[i].metadata, chunks[i].text});
        }
        store.upsert(std::move(entries));
    }

    // replace any existing store atomically
    if (cfg.store.has_parent_path()) std::filesystem::create_directories(cfg.store.parent_path());
    std::filesystem::path tmp = cfg.store;
    tmp += ".tmp";
    store.save(tmp);
    std::filesystem::rename(tmp, cfg.store);

    nlohmann::json report = {{"docs", docs.size()},
                             {"chunks", chunks.size()},
                             {"dim", store.dim()},
                             {"store", cfg.store.string()},
                             {"timings", {{"elapsed_seconds", seconds_since(start)}}}};
    write_json_file(results_path(cfg, "ingest_report.json"), report);
    return report;
}

nlohmann::json cmd_extract(const RunConfig& cfg) {
    auto start = Clock::now();
    require_path(cfg.queries, "queries");
    auto queries = load_queries(cfg.queries);

    FilterService filters(cfg, derive_catalog(cfg));

    std::vector<ExtractionRecord> records(queries.size());
    std::vector<bool> hit(queries.size(), false);
    std::mutex failure_mutex;
    std::string first_failure;

    run_parallel(queries.size(), cfg.workers, [&](std::size_t i) {
        try {
            auto looked = filters.lookup(queries[i]);
            hit[i] = looked.cache_hit;
            records[i] = std::move(looked.record);
        } catch (const std::exception& e) {
            std::lock_guard lock(failure_mutex);
            if (first_failure.empty()) first_failure = e.what();
        }
    });
    if (!first_failure.empty()) throw ConfigError(first_failure);

    std::size_t cache_hits = 0, fallbacks = 0, provider_failures = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (hit[i]) ++cache_hits;
        if (records[i].fallback_used) ++fallbacks;
        if (records[i].fallback_reason == "provider") ++provider_failures;
    }
    if (!records.empty() && provider_failures == records.size())
        throw ProviderError("extraction provider failed for every query", /*retryable=*/false);

    auto stats = filter_stats(records, queries);

    nlohmann::json report = {{"n_queries", queries.size()},
                             {"cache_hits", cache_hits},
                             {"provider_calls", queries.size() - cache_hits},
                             {"fallbacks", fallbacks},
                             {"filter_cache", cache_path(cfg).string()},
                             {"stats", stats_json(stats)},
                             {"timings", {{"elapsed_seconds", seconds_since(start)}}}};
    write_json_file(results_path(cfg, "extract_report.json"), report);
    return report;
}

nlohmann::json cmd_retrieve(const RunConfig& cfg) {
    auto start = Clock::now();
    require_path(cfg.queries, "queries");
    require_path(cfg.store, "store");

    auto queries = load_queries(cfg.queries);
    VectorStore store = VectorStore::load(cfg.store);
    std::optional<FilterService> filters;
    if (!cfg.baseline) filters.emplace(cfg, derive_catalog(cfg));

    auto results = run_retrieval(cfg, queries, store, cfg.pipeline.final_k, cfg.baseline,
                                 filters ? &*filters : nullptr);
    write_jsonl(results_path(cfg, "retrieval_results.jsonl"), results);

    std::size_t degraded = 0, errors = 0;
    for (const auto& r : results) {
        if (r.degraded) ++degraded;
        if (!r.error.empty()) ++errors;
    }
    nlohmann::json report = {{"n_queries", queries.size()},
                             {"baseline", cfg.baseline},
                             {"degraded", degraded},
                             {"errors", errors},
                             {"results", results_path(cfg, "retrieval_results.jsonl").string()},
                             {"timings", {{"elapsed_seconds", seconds_since(start)}}}};
    write_json_file(results_path(cfg, "retrieve_report.json"), report);
    return report;
}

nlohmann::json cmd_eval_retrieval(const RunConfig& cfg) {
    auto start = Clock::now();
    require_path(cfg.queries, "queries");
    require_path(cfg.store, "store");

    auto all_queries = load_queries(cfg.queries);
    std::vector<BenchmarkQuery> queries;
    for (auto& q : all_queries) {
        if (q.question_type != QuestionType::Null) queries.push_back(std::move(q));
    }

    VectorStore store = VectorStore::load(cfg.store);
    std::optional<FilterService> filters;
    if (!cfg.baseline) filters.emplace(cfg, derive_catalog(cfg));

    auto results = run_retrieval(cfg, queries, store, cfg.pipeline.final_k, cfg.baseline,
                                 filters ? &*filters : nullptr);
    write_jsonl(results_path(cfg, "retrieval_results.jsonl"), results);

    auto metrics = retrieval_metrics(results, queries, cfg.pipeline.final_k);
    nlohmann::json report = metrics_json(metrics);
    report["k"] = metrics.k;
    report["n_queries"] = metrics.n_queries;
    report["baseline_mode"] = cfg.baseline;

    std::size_t degraded = 0;
    for (const auto& r : results) {
        if (r.degraded) ++degraded;
    }
    report["degraded"] = degraded;

    if (cfg.with_baseline && !cfg.baseline) {
        auto baseline_results = run_retrieval(cfg, queries, store, cfg.pipeline.final_k,
                                              /*baseline=*/true, filters ? &*filters : nullptr);
        write_jsonl(results_path(cfg, "baseline_retrieval_results.jsonl"), baseline_results);
        report["baseline"] = metrics_json(retrieval_metrics(baseline_results, queries,
                                                            cfg.pipeline.final_k));
    }

    report["timings"] = {{"elapsed_seconds", seconds_since(start)}};
    write_json_file(results_path(cfg, "eval_retrieval_report.json"), report);
    return report;
}

namespace {

std::vector<GenerationResult> run_generation(const RunConfig& cfg,
                                             const std::vector<BenchmarkQuery>& queries,
                                             const std::vector<RetrievalResult>& retrievals) {
    if (!cfg.has_generator_llm)
        throw ConfigError("providers.generator_llm is required for generation commands");
    auto llm = make_chat_model(cfg.generator_llm);

    std::vector<GenerationResult> results(queries.size());
    run_parallel(queries.size(), cfg.workers, [&](std::size_t i) {
        try {
            results[i] = generate(queries[i], retrievals[i], *llm);
        } catch (const std::exception& e) {
            results[i].query_id = queries[i].query_id;
            results[i].model_name = cfg.generator_llm.model_name;
            results[i].error = e.what();
        }
    });
    return results;
}

} // namespace

nlohmann::json cmd_generate(const RunConfig& cfg) {
    auto start = Clock::now();
    require_path(cfg.queries, "queries");
    require_path(cfg.store, "store");

    auto queries = load_queries(cfg.queries);
    VectorStore store = VectorStore::load(cfg.store);
    std::optional<FilterService> filters;
    if (!cfg.baseline) filters.emplace(cfg, derive_catalog(cfg));

    auto retrievals = run_retrieval(cfg, queries, store, cfg.generation_k, cfg.baseline,
                                    filters ? &*filters : nullptr);
    auto generations = run_generation(cfg, queries, retrievals);
    write_jsonl(results_path(cfg, "generation_results.jsonl"), generations);

    std::size_t errors = 0;
    for (const auto& g : generations) {
        if (!g.error.empty()) ++errors;
    }
    if (!generations.empty() && errors == generations.size())
        throw ProviderError("generation provider failed for every query", /*retryable=*/false);

    nlohmann::json report = {{"n_queries", queries.size()},
                             {"errors", errors},
                             {"results", results_path(cfg, "generation_results.jsonl").string()},
                             {"timings", {{"elapsed_seconds", seconds_since(start)}}}};
    write_json_file(results_path(cfg, "generate_report.json"), report);
    return report;
}

nlohmann::json cmd_eval_generation(const RunConfig& cfg) {
    auto start = Clock::now();
    require_path(cfg.queries, "queries");
    require_path(cfg.store, "store");

    auto queries = load_queries(cfg.queries);
    VectorStore store = VectorStore::load(cfg.store);
    std::optional<FilterService> filters;
    if (!cfg.baseline) filters.emplace(cfg, derive_catalog(cfg));

    auto retrievals = run_retrieval(cfg, queries, store, cfg.generation_k, cfg.baseline,
                                    filters ? &*filters : nullptr);
    auto generations = run_generation(cfg, queries, retrievals);
    write_jsonl(results_path(cfg, "generation_results.jsonl"), generations);

    std::size_t errors = 0;
    for (const auto& g : generations) {
        if (!g.error.empty()) ++errors;
    }
    if (!generations.empty() && errors == generations.size())
        throw ProviderError("generation provider failed for every query", /*retryable=*/false);

    auto report_data = accuracy(generations, queries, cfg.strict_accuracy);
    nlohmann::json by_type = nlohmann::json::object();
    nlohmann::json counts = nlohmann::json::object();
    for (const auto& [type, value] : report_data.by_type) by_type[to_string(type)] = value;
    for (const auto& [type, value] : report_data.counts) counts[to_string(type)] = value;

    nlohmann::json report = {{"overall", report_data.overall},
                             {"by_type", std::move(by_type)},
                             {"counts", std::move(counts)},
                             {"n_queries", report_data.n_queries},
                             {"strict_accuracy", cfg.strict_accuracy},
                             {"errors", errors},
                             {"timings", {{"elapsed_seconds", seconds_since(start)}}}};
    write_json_file(results_path(cfg, "eval_generation_report.json"), report);
    return report;
}

nlohmann::json run_command(const std::string& command, const nlohmann::json& config) {
    RunConfig cfg = RunConfig::from_json(config);
    if (command == "ingest") return cmd_ingest(cfg);
    if (command == "extract") return cmd_extract(cfg);
    if (command == "retrieve") return cmd_retrieve(cfg);
    if (command == "eval-retrieval") return cmd_eval_retrieval(cfg);
    if (command == "generate") return cmd_generate(cfg);
    if (command == "eval-generation") return cmd_eval_generation(cfg);
    throw ConfigError("unknown command \"" + command + "\"");
}

} // namespace mmrag
