#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace mmrag {

// Metadata carried by every indexed chunk. `published_at` is either empty or
// in the canonical date layout produced by normalize_date().
struct ChunkMetadata {
    std::string source;
    std::string published_at;
    std::string title;

    bool operator==(const ChunkMetadata&) const = default;
};

// A clause value as read from the model output: a bare scalar, a bare list,
// or a map from operator name ("$in", "$nin", "$lt", ...) to scalar/list.
// Nothing is dropped or rewritten at this stage.
struct RawOperand {
    bool is_list = false;
    std::vector<std::string> values;

    bool operator==(const RawOperand&) const = default;
};

struct RawClause {
    enum class Kind { Scalar, List, OpMap };

    Kind kind = Kind::Scalar;
    RawOperand operand;                                    // Scalar / List
    std::vector<std::pair<std::string, RawOperand>> ops;   // OpMap, insertion order

    bool operator==(const RawClause&) const = default;
};

struct RawFilter {
    std::vector<std::pair<std::string, RawClause>> entries; // insertion order

    bool empty() const { return entries.empty(); }
    bool operator==(const RawFilter&) const = default;
};

enum class FilterOp { In, Nin };

// Normalized clause: $in/$nin only, values non-empty and de-duplicated with
// order preserved.
struct OperatorClause {
    FilterOp op = FilterOp::In;
    std::vector<std::string> values;

    bool operator==(const OperatorClause&) const = default;
};

// Normalized metadata predicate over the two recognized fields. Fields are
// combined with an implicit AND; an empty expression matches everything.
struct FilterExpr {
    std::optional<OperatorClause> source;
    std::optional<OperatorClause> published_at;

    bool empty() const { return !source && !published_at; }
    bool operator==(const FilterExpr&) const = default;
};

// Locates and parses the first well-formed filter dictionary in `text`.
// Accepts strict JSON as well as the single-quoted dictionary syntax LLMs
// emit, with surrounding prose or code fences ignored. A brace-less
// dictionary body ("key": {...}, "key": {...}) is accepted as a fallback.
// Throws ParseError (with byte offset) when nothing well-formed is found.
RawFilter parse_filter(std::string_view text);

// Canonicalizes a date rendering to "<full month name> <non-padded day>, <year>".
// Accepted inputs: the canonical layout itself, a zero-padded day variant,
// and ISO "YYYY-MM-DD". Throws DateFormatError otherwise.
std::string normalize_date(std::string_view text);

// Total normalization of a raw filter against the closed source catalog:
//   - bare scalars/lists become $in clauses
//   - source values are catalog-matched case-insensitively and re-spelled,
//     unmatched values dropped
//   - published_at with any operator outside $in/$nin is removed whole
//   - published_at values are canonicalized, unparseable ones dropped
//   - empty clauses and unrecognized fields are removed
FilterExpr normalize_filter(const RawFilter& raw, const std::vector<std::string>& source_catalog);

// True iff every clause is satisfied by the metadata.
bool matches(const FilterExpr& filter, const ChunkMetadata& meta);

// Strict-JSON rendering with $in/$nin operator keys, e.g.
// {"source":{"$in":["TechCrunch","Engadget"]}}. Keys are emitted in
// lexicographic order, so published_at precedes source.
nlohmann::json to_json(const FilterExpr& filter);
std::string to_json_string(const FilterExpr& filter);
FilterExpr filter_from_json(const nlohmann::json& j);

// Raw filters round-trip through JSON for the extraction cache.
nlohmann::ordered_json to_json(const RawFilter& raw);
RawFilter raw_filter_from_json(const nlohmann::ordered_json& j);

} // namespace mmrag
