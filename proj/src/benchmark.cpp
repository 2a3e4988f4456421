#include "mmrag/benchmark.hpp"

#include <fstream>

#include <json.hpp>

#include "mmrag/errors.hpp"

namespace mmrag {

std::string to_string(QuestionType type) {
    switch (type) {
        case QuestionType::Inference: return "inference";
        case QuestionType::Comparison: return "comparison";
        case QuestionType::Temporal: return "temporal";
        case QuestionType::Null: return "null";
    }
    return "inference";
}

QuestionType question_type_from_string(std::string_view s) {
    auto base = s;
    if (auto pos = base.find("_query"); pos != std::string_view::npos) base = base.substr(0, pos);
    if (base == "inference") return QuestionType::Inference;
    if (base == "comparison") return QuestionType::Comparison;
    if (base == "temporal") return QuestionType::Temporal;
    if (base == "null") return QuestionType::Null;
    throw ConfigError("unknown question type: \"" + std::string(s) + "\"");
}

std::vector<BenchmarkQuery> load_queries(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open queries file: " + path.string());
    nlohmann::json root;
    try {
        in >> root;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("queries file " + path.string() + " is not valid JSON: " + e.what());
    }
    if (!root.is_array()) throw IoError("queries file " + path.string() + " must be a JSON array");

    std::vector<BenchmarkQuery> out;
    out.reserve(root.size());
    for (std::size_t i = 0; i < root.size(); ++i) {
        const auto& rec = root[i];
        if (!rec.is_object()) throw SchemaError(i, "(record)");
        for (const char* field : {"query", "answer", "question_type"}) {
            if (!rec.contains(field) || !rec[field].is_string()) throw SchemaError(i, field);
        }

        BenchmarkQuery q;
        q.query = rec["query"].get<std::string>();
        q.answer = rec["answer"].get<std::string>();
        try {
            q.question_type = question_type_from_string(rec["question_type"].get<std::string>());
        } catch (const ConfigError&) {
            throw SchemaError(i, "question_type");
        }
        if (rec.contains("query_id") && rec["query_id"].is_string())
            q.query_id = rec["query_id"].get<std::string>();
        if (q.query_id.empty()) q.query_id = "q" + std::to_string(i);

        if (rec.contains("evidence_list")) {
            if (!rec["evidence_list"].is_array()) throw SchemaError(i, "evidence_list");
            for (const auto& ev : rec["evidence_list"]) {
                Evidence e;
                e.title = ev.value("title", std::string{});
                e.source = ev.value("source", std::string{});
                e.published_at = ev.value("published_at", std::string{});
                e.fact = ev.value("fact", std::string{});
                if (e.fact.empty()) throw SchemaError(i, "evidence_list.fact");
                if (e.source.empty()) throw SchemaError(i, "evidence_list.source");
                q.evidence_list.push_back(std::move(e));
            }
        }
        if (q.question_type == QuestionType::Null && !q.evidence_list.empty())
            throw SchemaError(i, "evidence_list (null query must have none)");
        if (q.question_type != QuestionType::Null && q.evidence_list.empty())
            throw SchemaError(i, "evidence_list (required for non-null query)");

        out.push_back(std::move(q));
    }
    return out;
}

} // namespace mmrag
