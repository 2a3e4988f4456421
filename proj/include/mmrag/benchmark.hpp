#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mmrag {

enum class QuestionType { Inference, Comparison, Temporal, Null };

std::string to_string(QuestionType type);

// Accepts both bare names ("temporal") and dataset spellings
// ("temporal_query"). Throws SchemaError-style ConfigError on anything else.
QuestionType question_type_from_string(std::string_view s);

// A gold evidence sentence with the article metadata it came from.
struct Evidence {
    std::string title;
    std::string source;
    std::string published_at;
    std::string fact;
};

struct BenchmarkQuery {
    std::string query_id;
    std::string query;
    std::string answer; // gold
    QuestionType question_type = QuestionType::Inference;
    std::vector<Evidence> evidence_list; // empty iff question_type == Null
};

// JSON array of {query, answer, question_type, evidence_list:[{title, source,
// published_at, fact}]}. Missing query_id fields are synthesized from the
// record position. Null queries must have no evidence, all others at least
// one; violations raise SchemaError.
std::vector<BenchmarkQuery> load_queries(const std::filesystem::path& path);

} // namespace mmrag
