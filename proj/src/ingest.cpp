#include "mmrag/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "mmrag/errors.hpp"
#include "mmrag/hash.hpp"

namespace mmrag {

namespace {

const std::unordered_set<std::string>& abbreviations() {
    static const std::unordered_set<std::string> set = {
        "mr.",  "mrs.", "ms.",  "dr.",   "prof.", "sr.",   "jr.",  "st.",
        "vs.",  "etc.", "e.g.", "i.e.",  "u.s.",  "u.k.",  "u.n.", "inc.",
        "ltd.", "co.",  "corp.", "no.",  "fig.",  "al.",   "approx.",
    };
    return set;
}

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return out;
}

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

// Word ending at `end` (exclusive), including its trailing terminator.
std::string trailing_word(std::string_view text, std::size_t end) {
    std::size_t b = end;
    while (b > 0 && !std::isspace(static_cast<unsigned char>(text[b - 1]))) --b;
    return ascii_lower(text.substr(b, end - b));
}

bool opens_sentence(char c) {
    unsigned char u = static_cast<unsigned char>(c);
    return std::isupper(u) || std::isdigit(u) || c == '"' || c == '\'' ||
           u >= 0x80; // UTF-8 lead byte, e.g. curly quotes
}

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string json_to_text(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_null()) return "";
    return v.dump();
}

struct Unit {
    std::string text;
    int tokens = 0;
};

// Splits an oversized sentence at raw word boundaries so every piece stays
// within chunk_size tokens.
std::vector<Unit> hard_split(const std::string& sentence, int chunk_size, const Tokenizer& tok) {
    std::vector<std::string> words;
    std::size_t i = 0;
    while (i < sentence.size()) {
        while (i < sentence.size() && std::isspace(static_cast<unsigned char>(sentence[i]))) ++i;
        std::size_t start = i;
        while (i < sentence.size() && !std::isspace(static_cast<unsigned char>(sentence[i]))) ++i;
        if (i > start) words.push_back(sentence.substr(start, i - start));
    }

    std::vector<Unit> pieces;
    Unit cur;
    for (const auto& word : words) {
        int wc = static_cast<int>(tok.count(word));
        if (!cur.text.empty() && cur.tokens + wc > chunk_size) {
            pieces.push_back(std::move(cur));
            cur = Unit{};
        }
        if (!cur.text.empty()) cur.text += ' ';
        cur.text += word;
        cur.tokens += wc;
    }
    if (!cur.text.empty()) pieces.push_back(std::move(cur));
    return pieces;
}

} // namespace

std::vector<Document> load_corpus(const std::filesystem::path& path, const std::string& body_key) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open corpus file: " + path.string());

    nlohmann::json root;
    try {
        in >> root;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("corpus file " + path.string() + " is not valid JSON: " + e.what());
    }
    if (!root.is_array()) throw IoError("corpus file " + path.string() + " must be a JSON array");

    std::vector<Document> docs;
    docs.reserve(root.size());
    std::unordered_set<std::string> seen_ids;

    for (std::size_t i = 0; i < root.size(); ++i) {
        const auto& rec = root[i];
        if (!rec.is_object()) throw SchemaError(i, "(record)");
        for (const char* field : {"title", "source", "published_at"}) {
            if (!rec.contains(field) || !rec[field].is_string()) throw SchemaError(i, field);
        }
        if (!rec.contains(body_key)) throw SchemaError(i, body_key);

        Document d;
        d.title = rec["title"].get<std::string>();
        d.source = rec["source"].get<std::string>();
        d.published_at = rec["published_at"].get<std::string>();
        d.body = json_to_text(rec[body_key]);
        if (d.body.empty()) throw SchemaError(i, body_key);
        if (rec.contains("category")) d.category = json_to_text(rec["category"]);
        if (rec.contains("url")) d.url = json_to_text(rec["url"]);

        // keep dates in the canonical layout when they parse; pass through otherwise
        try {
            d.published_at = normalize_date(d.published_at);
        } catch (const DateFormatError&) {
        }

        if (rec.contains("doc_id") && rec["doc_id"].is_string())
            d.doc_id = rec["doc_id"].get<std::string>();
        else if (rec.contains("id") && rec["id"].is_string())
            d.doc_id = rec["id"].get<std::string>();
        if (d.doc_id.empty()) {
            d.doc_id = sha256_hex(d.title + "\x1f" + d.source + "\x1f" + d.published_at + "\x1f" +
                                  d.body)
                           .substr(0, 16);
        }
        if (!seen_ids.insert(d.doc_id).second) throw SchemaError(i, "doc_id (duplicate)");
        docs.push_back(std::move(d));
    }
    return docs;
}

std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<std::string> sentences;
    std::size_t start = 0;
    std::size_t i = 0;

    auto flush = [&](std::size_t end) {
        std::string s = trim(text.substr(start, end - start));
        if (!s.empty()) sentences.push_back(std::move(s));
        start = end;
    };

    while (i < text.size()) {
        if (!is_terminator(text[i])) {
            ++i;
            continue;
        }
        std::size_t term_end = i;
        while (term_end < text.size() && is_terminator(text[term_end])) ++term_end;

        // boundary requires whitespace then a sentence opener
        std::size_t j = term_end;
        while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        bool boundary = j > term_end && j < text.size() && opens_sentence(text[j]);

        if (boundary && text[i] == '.' && term_end == i + 1) {
            std::string word = trailing_word(text, term_end);
            if (abbreviations().count(word)) boundary = false;
            // single-letter initials: "J. Smith"
            if (word.size() == 2 && std::isalpha(static_cast<unsigned char>(word[0])))
                boundary = false;
        }

        i = term_end;
        if (boundary) flush(term_end);
    }
    flush(text.size());
    return sentences;
}

std::vector<Chunk> chunk_document(const Document& doc, const ChunkingConfig& cfg,
                                  const Tokenizer& tok) {
    if (!cfg.valid())
        throw ConfigError("chunking config requires 0 <= chunk_overlap < chunk_size");

    std::vector<Unit> units;
    for (auto& sentence : split_sentences(doc.body)) {
        int tokens = static_cast<int>(tok.count(sentence));
        if (tokens > cfg.chunk_size) {
            auto pieces = hard_split(sentence, cfg.chunk_size, tok);
            units.insert(units.end(), pieces.begin(), pieces.end());
        } else {
            units.push_back(Unit{std::move(sentence), tokens});
        }
    }

    std::vector<Chunk> chunks;
    auto emit = [&](std::size_t begin, std::size_t end) {
        Chunk c;
        c.ordinal = static_cast<int>(chunks.size());
        c.doc_id = doc.doc_id;
        c.chunk_id = doc.doc_id + "#" + std::to_string(c.ordinal);
        for (std::size_t u = begin; u < end; ++u) {
            if (!c.text.empty()) c.text += ' ';
            c.text += units[u].text;
            c.token_count += units[u].tokens;
        }
        c.metadata = ChunkMetadata{doc.source, doc.published_at, doc.title};
        chunks.push_back(std::move(c));
    };

    std::size_t window_begin = 0;
    int window_tokens = 0;
    for (std::size_t u = 0; u < units.size(); ++u) {
        if (u > window_begin && window_tokens + units[u].tokens > cfg.chunk_size) {
            emit(window_begin, u);
            // carry: smallest trailing run reaching the overlap...
            std::size_t carry = u;
            int carry_tokens = 0;
            while (carry > window_begin && carry_tokens < cfg.chunk_overlap) {
                --carry;
                carry_tokens += units[carry].tokens;
            }
            // ...shrunk until the incoming sentence fits
            while (carry < u && carry_tokens + units[u].tokens > cfg.chunk_size) {
                carry_tokens -= units[carry].tokens;
                ++carry;
            }
            window_begin = carry;
            window_tokens = carry_tokens;
        }
        window_tokens += units[u].tokens;
    }
    if (window_begin < units.size()) emit(window_begin, units.size());
    return chunks;
}

} // namespace mmrag
