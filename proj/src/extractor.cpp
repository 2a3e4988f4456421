#include "mmrag/extractor.hpp"

#include <chrono>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include "mmrag/errors.hpp"
#include "mmrag/hash.hpp"

namespace mmrag {

PromptTemplate PromptTemplate::standard(std::vector<std::string> catalog) {
    PromptTemplate t;
    t.instruction =
        "Given the question, extract the metadata to filter the database about article sources. "
        "Avoid stopwords.";
    t.source_catalog = std::move(catalog);
    t.examples = {
        {"Who is the individual associated with the cryptocurrency industry facing a criminal "
         "trial on fraud and conspiracy charges, as reported by both The Verge and TechCrunch, "
         "and is accused by prosecutors of committing fraud for personal gain?",
         "{'source': {'$in': ['The Verge', 'TechCrunch']}}"},
        {"After the TechCrunch report on October 7, 2023, concerning Dave Clark's comments on "
         "Flexport, and the subsequent TechCrunch article on October 30, 2023, regarding Ryan "
         "Petersen's actions at Flexport, was there a change in the nature of the events "
         "reported?",
         "{'source': {'$in': ['TechCrunch']}, 'published_at': {'$in': ['October 7, 2023', "
         "'October 30, 2023']}}"},
        {"Which company, known for its dominance in the e-reader space and for offering "
         "exclusive invite-only deals during sales events, faced a stock decline due to an "
         "antitrust lawsuit reported by 'The Sydney Morning Herald' and discussed by sellers in "
         "a 'Cnbc | World Business News Leader' article?",
         "{'source': {'$in': ['The Sydney Morning Herald', 'Cnbc | World Business News "
         "Leader']}}"},
    };
    t.suffix = "If you detect multiple queries, return the answer for the first. Now it is your "
               "turn:";
    return t;
}

std::string build_prompt(const PromptTemplate& tmpl, std::string_view query) {
    std::string out;
    out += tmpl.instruction;
    out += '\n';
    out += "The sources can only be from the list: [";
    for (std::size_t i = 0; i < tmpl.source_catalog.size(); ++i) {
        if (i > 0) out += ", ";
        out += '\'';
        out += tmpl.source_catalog[i];
        out += '\'';
    }
    out += "]\n";
    out += "Examples to follow:\n";
    for (const auto& [question, answer] : tmpl.examples) {
        out += "Question: ";
        out += question;
        out += "\nAnswer: ";
        out += answer;
        out += '\n';
    }
    out += tmpl.suffix;
    out += '\n';
    out += "Question: ";
    out += query;
    out += "\nAnswer:";
    return out;
}

ExtractionRecord extract(const std::string& query_id, const std::string& query, ChatModel& llm,
                         const PromptTemplate& tmpl, const std::vector<std::string>& catalog) {
    ExtractionRecord rec;
    rec.query_id = query_id;
    rec.model_name = llm.model_name();

    const std::string prompt = build_prompt(tmpl, query);
    rec.prompt_sha256 = sha256_hex(prompt);

    CompletionParams params;
    params.temperature = 0.0;

    auto start = std::chrono::steady_clock::now();
    try {
        rec.raw_response = llm.complete(prompt, params);
        rec.raw_filter = parse_filter(rec.raw_response);
        rec.filter = normalize_filter(rec.raw_filter, catalog);
    } catch (const ParseError&) {
        rec.fallback_used = true;
        rec.fallback_reason = "parse";
        rec.filter = FilterExpr{};
    } catch (const std::exception&) {
        // provider failure after retries (incl. fixture misses)
        rec.fallback_used = true;
        rec.fallback_reason = "provider";
        rec.filter = FilterExpr{};
    }
    rec.latency_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

ExtractionStats filter_stats(const std::vector<ExtractionRecord>& records,
                             const std::vector<BenchmarkQuery>& queries) {
    ExtractionStats stats;
    stats.n_records = records.size();
    if (records.empty()) return stats;
    stats.empty = false;

    std::unordered_set<std::string> query_ids;
    for (const auto& q : queries) query_ids.insert(q.query_id);
    std::unordered_set<std::string> seen;
    for (const auto& r : records) {
        if (!query_ids.count(r.query_id))
            throw AlignmentError("extraction record for unknown query_id \"" + r.query_id + "\"");
        if (!seen.insert(r.query_id).second)
            throw AlignmentError("duplicate extraction record for query_id \"" + r.query_id + "\"");
    }
    if (records.size() != queries.size())
        throw AlignmentError("record/query count mismatch: " + std::to_string(records.size()) +
                             " vs " + std::to_string(queries.size()));

    std::size_t with_source = 0, with_date = 0;
    double latency_sum = 0.0;
    for (const auto& r : records) {
        if (r.filter.source) ++with_source;
        if (r.filter.published_at) ++with_date;
        latency_sum += r.latency_seconds;
    }
    std::size_t temporal = 0;
    for (const auto& q : queries) {
        if (q.question_type == QuestionType::Temporal) ++temporal;
    }

    stats.pct_with_source = 100.0 * double(with_source) / double(records.size());
    stats.pct_with_date = 100.0 * double(with_date) / double(records.size());
    stats.pct_temporal_queries = 100.0 * double(temporal) / double(queries.size());
    stats.mean_latency_seconds = latency_sum / double(records.size());
    return stats;
}

nlohmann::json to_json(const ExtractionRecord& rec) {
    nlohmann::json j;
    j["query_id"] = rec.query_id;
    j["model_name"] = rec.model_name;
    j["prompt_sha256"] = rec.prompt_sha256;
    j["raw_response"] = rec.raw_response;
    j["raw_filter"] = to_json(rec.raw_filter);
    j["filter"] = to_json(rec.filter);
    j["latency_seconds"] = rec.latency_seconds;
    j["fallback_used"] = rec.fallback_used;
    j["fallback_reason"] = rec.fallback_reason;
    return j;
}

ExtractionRecord extraction_record_from_json(const nlohmann::json& j) {
    ExtractionRecord rec;
    rec.query_id = j.value("query_id", std::string{});
    rec.model_name = j.value("model_name", std::string{});
    rec.prompt_sha256 = j.value("prompt_sha256", std::string{});
    rec.raw_response = j.value("raw_response", std::string{});
    if (j.contains("raw_filter")) rec.raw_filter = raw_filter_from_json(j["raw_filter"]);
    if (j.contains("filter")) rec.filter = filter_from_json(j["filter"]);
    rec.latency_seconds = j.value("latency_seconds", 0.0);
    rec.fallback_used = j.value("fallback_used", false);
    rec.fallback_reason = j.value("fallback_reason", std::string{});
    return rec;
}

FilterCache::FilterCache(std::filesystem::path path) : path_(std::move(path)) {
    std::ifstream in(path_);
    if (!in) return; // cold cache
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            records_.push_back(extraction_record_from_json(nlohmann::json::parse(line)));
        } catch (const std::exception& e) {
            throw FormatError("filter cache " + path_.string() + " line " +
                              std::to_string(lineno) + ": " + e.what());
        }
    }
}

std::optional<ExtractionRecord> FilterCache::find(const std::string& model_name,
                                                  const std::string& prompt_sha256) const {
    std::lock_guard lock(mutex_);
    for (const auto& r : records_) {
        if (r.model_name == model_name && r.prompt_sha256 == prompt_sha256) return r;
    }
    return std::nullopt;
}

std::size_t FilterCache::size() const {
    std::lock_guard lock(mutex_);
    return records_.size();
}

std::vector<ExtractionRecord> FilterCache::records() const {
    std::lock_guard lock(mutex_);
    return records_;
}

void FilterCache::append(const ExtractionRecord& rec) {
    std::lock_guard lock(mutex_);
    std::ofstream out(path_, std::ios::app);
    if (!out) throw IoError("cannot append to filter cache: " + path_.string());
    out << to_json(rec).dump() << '\n';
    out.flush();
    if (!out) throw IoError("write failed on filter cache: " + path_.string());
    records_.push_back(rec);
}

} // namespace mmrag
