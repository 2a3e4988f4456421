#include "mmrag/filter_engine.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>

#include "mmrag/errors.hpp"

namespace mmrag {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return out;
}

// ---------------------------------------------------------------------------
// Tolerant dictionary parsing. The surface to cover is small: strict JSON
// objects plus the single-quoted dictionary syntax chat models emit, embedded
// anywhere in prose or code fences.
// ---------------------------------------------------------------------------

struct PValue {
    enum class Type { String, Dict, List };
    Type type = Type::String;
    std::string str;
    std::vector<std::pair<std::string, PValue>> dict;
    std::vector<PValue> list;
};

struct ParseFail {
    std::size_t offset;
};

class DictParser {
public:
    explicit DictParser(std::string_view text) : text_(text) {}

    PValue parse_dict_at(std::size_t pos) {
        pos_ = pos;
        PValue v = parse_dict();
        return v;
    }

    // Brace-less dictionary body covering the whole text, e.g. the form
    // `"source": {"$in": [...]}, "published_at": {...}` with no outer braces.
    PValue parse_bare_body() {
        pos_ = 0;
        PValue v;
        v.type = PValue::Type::Dict;
        skip_ws();
        if (eof()) fail();
        parse_entries_until(v, std::nullopt);
        skip_ws();
        if (!eof()) fail();
        return v;
    }

    std::size_t failure_offset() const { return fail_offset_; }

private:
    bool eof() const { return pos_ >= text_.size(); }
    char peek() const { return text_[pos_]; }

    [[noreturn]] void fail() {
        fail_offset_ = std::max(fail_offset_, pos_);
        throw ParseFail{pos_};
    }

    void skip_ws() {
        while (!eof() && std::isspace(static_cast<unsigned char>(peek()))) ++pos_;
    }

    void expect(char c) {
        if (eof() || peek() != c) fail();
        ++pos_;
    }

    PValue parse_dict() {
        expect('{');
        PValue v;
        v.type = PValue::Type::Dict;
        skip_ws();
        if (!eof() && peek() == '}') {
            ++pos_;
            return v;
        }
        parse_entries_until(v, '}');
        expect('}');
        return v;
    }

    // Parses `key: value` pairs separated by commas. Stops before `closer`,
    // or at end of input when no closer is given.
    void parse_entries_until(PValue& dict, std::optional<char> closer) {
        while (true) {
            skip_ws();
            std::string key = parse_key();
            skip_ws();
            expect(':');
            PValue val = parse_value();
            dict.dict.emplace_back(std::move(key), std::move(val));
            skip_ws();
            if (eof()) {
                if (closer) fail();
                return;
            }
            if (closer && peek() == *closer) return;
            if (peek() == ',') {
                ++pos_;
                skip_ws();
                // tolerate a trailing comma before the closer
                if (closer && !eof() && peek() == *closer) return;
                if (!closer && eof()) return;
                continue;
            }
            fail();
        }
    }

    std::string parse_key() {
        skip_ws();
        if (eof()) fail();
        if (peek() == '"' || peek() == '\'') return parse_string();
        return parse_bare_word();
    }

    PValue parse_value() {
        skip_ws();
        if (eof()) fail();
        char c = peek();
        if (c == '{') return parse_dict();
        if (c == '[') return parse_list();
        PValue v;
        v.type = PValue::Type::String;
        if (c == '"' || c == '\'') {
            v.str = parse_string();
        } else {
            v.str = parse_bare_word();
        }
        return v;
    }

    PValue parse_list() {
        expect('[');
        PValue v;
        v.type = PValue::Type::List;
        skip_ws();
        if (!eof() && peek() == ']') {
            ++pos_;
            return v;
        }
        while (true) {
            v.list.push_back(parse_value());
            skip_ws();
            if (eof()) fail();
            if (peek() == ']') {
                ++pos_;
                return v;
            }
            expect(',');
            skip_ws();
            if (!eof() && peek() == ']') { // trailing comma
                ++pos_;
                return v;
            }
        }
    }

    std::string parse_string() {
        char quote = peek();
        ++pos_;
        std::string out;
        while (true) {
            if (eof()) fail();
            char c = peek();
            if (c == quote) {
                ++pos_;
                return out;
            }
            if (c == '\\') {
                ++pos_;
                if (eof()) fail();
                char esc = peek();
                switch (esc) {
                    case 'n': out.push_back('\n'); break;
                    case 't': out.push_back('\t'); break;
                    case 'r': out.push_back('\r'); break;
                    default: out.push_back(esc); break;
                }
                ++pos_;
                continue;
            }
            out.push_back(c);
            ++pos_;
        }
    }

    // Unquoted scalar: numbers, true/false/null, or a plain word. Runs to the
    // next structural character, trailing whitespace trimmed.
    std::string parse_bare_word() {
        std::size_t start = pos_;
        while (!eof()) {
            char c = peek();
            if (c == '{' || c == '}' || c == '[' || c == ']' || c == ',' || c == ':' ||
                c == '"' || c == '\'')
                break;
            ++pos_;
        }
        std::string out = trim(text_.substr(start, pos_ - start));
        if (out.empty()) fail();
        return out;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    std::size_t fail_offset_ = 0;
};

// Converts a parsed dictionary into the RawFilter domain. Returns nothing if
// the dictionary does not have filter shape (e.g. it is a bare operator map
// like {"$in": [...]}, or it nests deeper than operator -> values).
std::optional<RawFilter> to_raw_filter(const PValue& dict) {
    RawFilter out;
    for (const auto& [key, val] : dict.dict) {
        if (!key.empty() && key.front() == '$') return std::nullopt;
        RawClause clause;
        switch (val.type) {
            case PValue::Type::String:
                clause.kind = RawClause::Kind::Scalar;
                clause.operand.is_list = false;
                clause.operand.values = {val.str};
                break;
            case PValue::Type::List: {
                clause.kind = RawClause::Kind::List;
                clause.operand.is_list = true;
                for (const auto& item : val.list) {
                    if (item.type != PValue::Type::String) return std::nullopt;
                    clause.operand.values.push_back(item.str);
                }
                break;
            }
            case PValue::Type::Dict: {
                clause.kind = RawClause::Kind::OpMap;
                for (const auto& [op, operand] : val.dict) {
                    RawOperand ro;
                    if (operand.type == PValue::Type::String) {
                        ro.is_list = false;
                        ro.values = {operand.str};
                    } else if (operand.type == PValue::Type::List) {
                        ro.is_list = true;
                        for (const auto& item : operand.list) {
                            if (item.type != PValue::Type::String) return std::nullopt;
                            ro.values.push_back(item.str);
                        }
                    } else {
                        return std::nullopt;
                    }
                    clause.ops.emplace_back(op, std::move(ro));
                }
                break;
            }
        }
        out.entries.emplace_back(key, std::move(clause));
    }
    return out;
}

constexpr std::array<std::string_view, 12> kMonthNames = {
    "January", "February", "March",     "April",   "May",      "June",
    "July",    "August",   "September", "October", "November", "December"};

int days_in_month(int month, int year) {
    static const int days[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (month == 2) {
        bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
        return leap ? 29 : 28;
    }
    return days[month - 1];
}

std::string render_date(int year, int month, int day) {
    return std::string(kMonthNames[month - 1]) + " " + std::to_string(day) + ", " +
           std::to_string(year);
}

} // namespace

RawFilter parse_filter(std::string_view text) {
    std::size_t best_offset = 0;
    bool attempted = false;

    std::size_t search_from = 0;
    while (true) {
        std::size_t brace = text.find('{', search_from);
        if (brace == std::string_view::npos) break;
        attempted = true;
        DictParser parser(text);
        try {
            PValue dict = parser.parse_dict_at(brace);
            if (auto raw = to_raw_filter(dict)) return *raw;
            best_offset = std::max(best_offset, brace);
        } catch (const ParseFail& f) {
            best_offset = std::max(best_offset, f.offset);
        }
        search_from = brace + 1;
    }

    // Fall back to a brace-less dictionary body spanning the whole text; this
    // is the shape filter snippets are quoted in.
    DictParser parser(text);
    try {
        PValue dict = parser.parse_bare_body();
        if (auto raw = to_raw_filter(dict)) return *raw;
    } catch (const ParseFail& f) {
        if (!attempted) best_offset = std::max(best_offset, f.offset);
    }

    if (!attempted && best_offset == 0) best_offset = text.size();
    throw ParseError("no well-formed filter dictionary found", best_offset);
}

std::string normalize_date(std::string_view text) {
    std::string s = trim(text);
    if (s.empty()) throw DateFormatError(s);

    auto all_digits = [](std::string_view v) {
        return !v.empty() && std::all_of(v.begin(), v.end(), [](unsigned char c) {
            return std::isdigit(c);
        });
    };

    // ISO "YYYY-MM-DD"
    {
        std::size_t d1 = s.find('-');
        std::size_t d2 = d1 == std::string::npos ? std::string::npos : s.find('-', d1 + 1);
        if (d1 != std::string::npos && d2 != std::string::npos && s.find('-', d2 + 1) == std::string::npos) {
            std::string_view ys(s.data(), d1);
            std::string_view ms(s.data() + d1 + 1, d2 - d1 - 1);
            std::string_view ds(s.data() + d2 + 1, s.size() - d2 - 1);
            if (ys.size() == 4 && all_digits(ys) && ms.size() >= 1 && ms.size() <= 2 &&
                all_digits(ms) && ds.size() >= 1 && ds.size() <= 2 && all_digits(ds)) {
                int year = std::stoi(std::string(ys));
                int month = std::stoi(std::string(ms));
                int day = std::stoi(std::string(ds));
                if (month >= 1 && month <= 12 && day >= 1 && day <= days_in_month(month, year))
                    return render_date(year, month, day);
            }
        }
    }

    // "<month name> <day>, <year>", day optionally zero-padded
    {
        std::size_t sp = s.find(' ');
        if (sp != std::string::npos) {
            std::string month_word = ascii_lower(std::string_view(s).substr(0, sp));
            int month = 0;
            for (std::size_t i = 0; i < kMonthNames.size(); ++i) {
                if (ascii_lower(kMonthNames[i]) == month_word) {
                    month = static_cast<int>(i) + 1;
                    break;
                }
            }
            if (month != 0) {
                std::size_t comma = s.find(',', sp);
                if (comma != std::string::npos) {
                    std::string day_str = trim(std::string_view(s).substr(sp + 1, comma - sp - 1));
                    std::string year_str = trim(std::string_view(s).substr(comma + 1));
                    if (!day_str.empty() && day_str.size() <= 2 && all_digits(day_str) &&
                        year_str.size() == 4 && all_digits(year_str)) {
                        int day = std::stoi(day_str);
                        int year = std::stoi(year_str);
                        if (day >= 1 && day <= days_in_month(month, year))
                            return render_date(year, month, day);
                    }
                }
            }
        }
    }

    throw DateFormatError(s);
}

FilterExpr normalize_filter(const RawFilter& raw, const std::vector<std::string>& source_catalog) {
    FilterExpr out;

    for (const auto& [field, clause] : raw.entries) {
        const bool is_source = field == "source";
        if (!is_source && field != "published_at") continue;
        // first occurrence of a field wins
        if (is_source ? out.source.has_value() : out.published_at.has_value()) continue;

        std::optional<FilterOp> op;
        const std::vector<std::string>* raw_values = nullptr;

        if (clause.kind == RawClause::Kind::OpMap) {
            if (!is_source) {
                bool unsupported = std::any_of(
                    clause.ops.begin(), clause.ops.end(),
                    [](const auto& e) { return e.first != "$in" && e.first != "$nin"; });
                if (unsupported) continue; // drop the whole date field
            }
            for (const auto& [name, operand] : clause.ops) {
                if (name == "$in") {
                    op = FilterOp::In;
                } else if (name == "$nin") {
                    op = FilterOp::Nin;
                } else {
                    continue;
                }
                raw_values = &operand.values;
                break;
            }
        } else {
            op = FilterOp::In;
            raw_values = &clause.operand.values;
        }
        if (!op || !raw_values) continue;

        std::vector<std::string> values;
        for (const auto& rv : *raw_values) {
            std::string v = trim(rv);
            if (v.empty()) continue;
            if (is_source) {
                std::string lowered = ascii_lower(v);
                auto hit = std::find_if(source_catalog.begin(), source_catalog.end(),
                                        [&](const std::string& c) { return ascii_lower(c) == lowered; });
                if (hit == source_catalog.end()) continue;
                v = *hit;
            } else {
                try {
                    v = normalize_date(v);
                } catch (const DateFormatError&) {
                    continue;
                }
            }
            if (std::find(values.begin(), values.end(), v) == values.end()) values.push_back(v);
        }
        if (values.empty()) continue;

        OperatorClause oc{*op, std::move(values)};
        if (is_source) {
            out.source = std::move(oc);
        } else {
            out.published_at = std::move(oc);
        }
    }
    return out;
}

bool matches(const FilterExpr& filter, const ChunkMetadata& meta) {
    auto satisfied = [](const OperatorClause& clause, const std::string& value) {
        bool member =
            std::find(clause.values.begin(), clause.values.end(), value) != clause.values.end();
        return clause.op == FilterOp::In ? member : !member;
    };
    if (filter.source && !satisfied(*filter.source, meta.source)) return false;
    if (filter.published_at && !satisfied(*filter.published_at, meta.published_at)) return false;
    return true;
}

namespace {

const char* op_key(FilterOp op) { return op == FilterOp::In ? "$in" : "$nin"; }

} // namespace

nlohmann::json to_json(const FilterExpr& filter) {
    nlohmann::json j = nlohmann::json::object();
    if (filter.source) j["source"] = {{op_key(filter.source->op), filter.source->values}};
    if (filter.published_at)
        j["published_at"] = {{op_key(filter.published_at->op), filter.published_at->values}};
    return j;
}

std::string to_json_string(const FilterExpr& filter) { return to_json(filter).dump(); }

FilterExpr filter_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw FormatError("filter JSON must be an object");
    FilterExpr out;
    for (const auto& [field, val] : j.items()) {
        if (field != "source" && field != "published_at")
            throw FormatError("unexpected filter field \"" + field + "\"");
        if (!val.is_object() || val.size() != 1)
            throw FormatError("filter clause for \"" + field + "\" must hold a single operator");
        const auto& [op_name, values] = *val.items().begin();
        OperatorClause clause;
        if (op_name == "$in") {
            clause.op = FilterOp::In;
        } else if (op_name == "$nin") {
            clause.op = FilterOp::Nin;
        } else {
            throw FormatError("unsupported operator \"" + op_name + "\"");
        }
        if (!values.is_array() || values.empty())
            throw FormatError("operator values for \"" + field + "\" must be a non-empty array");
        for (const auto& v : values) {
            std::string s = v.is_string() ? v.get<std::string>() : v.dump();
            if (std::find(clause.values.begin(), clause.values.end(), s) == clause.values.end())
                clause.values.push_back(std::move(s));
        }
        if (field == "source") {
            out.source = std::move(clause);
        } else {
            out.published_at = std::move(clause);
        }
    }
    return out;
}

nlohmann::ordered_json to_json(const RawFilter& raw) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [field, clause] : raw.entries) {
        switch (clause.kind) {
            case RawClause::Kind::Scalar:
                j[field] = clause.operand.values.empty() ? "" : clause.operand.values.front();
                break;
            case RawClause::Kind::List:
                j[field] = clause.operand.values;
                break;
            case RawClause::Kind::OpMap: {
                nlohmann::ordered_json ops = nlohmann::ordered_json::object();
                for (const auto& [op, operand] : clause.ops) {
                    if (operand.is_list) {
                        ops[op] = operand.values;
                    } else {
                        ops[op] = operand.values.empty() ? "" : operand.values.front();
                    }
                }
                j[field] = std::move(ops);
                break;
            }
        }
    }
    return j;
}

namespace {

std::string json_scalar_to_string(const nlohmann::ordered_json& v) {
    return v.is_string() ? v.get<std::string>() : v.dump();
}

} // namespace

RawFilter raw_filter_from_json(const nlohmann::ordered_json& j) {
    if (!j.is_object()) throw FormatError("raw filter JSON must be an object");
    RawFilter out;
    for (const auto& [field, val] : j.items()) {
        RawClause clause;
        if (val.is_object()) {
            clause.kind = RawClause::Kind::OpMap;
            for (const auto& [op, operand] : val.items()) {
                RawOperand ro;
                if (operand.is_array()) {
                    ro.is_list = true;
                    for (const auto& item : operand) ro.values.push_back(json_scalar_to_string(item));
                } else {
                    ro.is_list = false;
                    ro.values = {json_scalar_to_string(operand)};
                }
                clause.ops.emplace_back(op, std::move(ro));
            }
        } else if (val.is_array()) {
            clause.kind = RawClause::Kind::List;
            clause.operand.is_list = true;
            for (const auto& item : val) clause.operand.values.push_back(json_scalar_to_string(item));
        } else {
            clause.kind = RawClause::Kind::Scalar;
            clause.operand.is_list = false;
            clause.operand.values = {json_scalar_to_string(val)};
        }
        out.entries.emplace_back(field, std::move(clause));
    }
    return out;
}

} // namespace mmrag
