#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mmrag/filter_engine.hpp"
#include "mmrag/tokenizer.hpp"

namespace mmrag {

struct Document {
    std::string doc_id;
    std::string title;
    std::string source;
    std::string published_at;
    std::string category;
    std::string url;
    std::string body;
};

struct ChunkingConfig {
    int chunk_size = 256;
    int chunk_overlap = 32;

    bool valid() const { return chunk_size > 0 && chunk_overlap >= 0 && chunk_overlap < chunk_size; }
};

struct Chunk {
    std::string chunk_id; // doc_id + "#" + ordinal
    std::string doc_id;
    int ordinal = 0;
    std::string text;
    int token_count = 0;
    ChunkMetadata metadata;
};

// Loads a JSON array of article records (keys: title, source, published_at,
// optional category/url, and the body under `body_key`). Synthesizes a stable
// doc_id from a content hash when the record carries none. Throws IoError or
// SchemaError naming the first offending record and field.
std::vector<Document> load_corpus(const std::filesystem::path& path,
                                  const std::string& body_key = "body");

// Sentence boundaries sit after `.`/`!`/`?` runs followed by whitespace and an
// uppercase letter, quote, or digit. Common abbreviations (Mr., Dr., U.S.,
// e.g., i.e., vs., ...) and single-letter initials do not split. Text without
// a terminator comes back as one sentence; empty text as none.
std::vector<std::string> split_sentences(std::string_view text);

// Greedy sentence packing into token windows: whole sentences accumulate
// while the window stays within chunk_size; the next window starts with the
// smallest trailing run of sentences whose tokens reach chunk_overlap,
// shrunk (possibly to nothing) until the next sentence fits. A sentence
// longer than chunk_size is hard-split at token boundaries first.
std::vector<Chunk> chunk_document(const Document& doc, const ChunkingConfig& cfg,
                                  const Tokenizer& tok);

} // namespace mmrag
