#pragma once

#include <cstddef>
#include <filesystem>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "mmrag/filter_engine.hpp"

namespace mmrag {

struct Embedding {
    std::vector<double> values;

    std::size_t dim() const { return values.size(); }
    bool operator==(const Embedding&) const = default;
};

struct IndexEntry {
    std::string chunk_id;
    Embedding embedding;
    ChunkMetadata metadata;
    std::string text;
};

struct ScoredChunk {
    std::string chunk_id;
    double score = 0.0; // cosine similarity in [-1, 1]
    std::string text;
    ChunkMetadata metadata;
};

// cosine(u, v) = dot / (|u||v|); zero-norm vectors score 0.
double cosine_similarity(const Embedding& a, const Embedding& b);

// Exact-scan vector index with metadata filter pushdown: only entries whose
// metadata satisfies the filter compete for the top-K. Result order is
// (score desc, chunk_id asc). Readers may run concurrently; upserts take the
// write lock, so a search never sees a half-applied batch.
class VectorStore {
public:
    VectorStore() = default;

    VectorStore(VectorStore&& other) noexcept;
    VectorStore& operator=(VectorStore&& other) noexcept;
    VectorStore(const VectorStore&) = delete;
    VectorStore& operator=(const VectorStore&) = delete;

    // Replaces entries with a known chunk_id, appends the rest. The first
    // insert pins the store dimension. Returns the number written.
    std::size_t upsert(std::vector<IndexEntry> entries);

    std::vector<ScoredChunk> search(const Embedding& query, const FilterExpr& filter,
                                    std::size_t k) const;

    std::size_t size() const;
    std::size_t dim() const; // 0 until the first insert

    // Binary format: "MMRAG-VS1" magic, u32 dim, u64 count, then per entry the
    // five length-prefixed strings (chunk_id, source, published_at, title,
    // text) and dim little-endian 64-bit floats.
    void save(const std::filesystem::path& path) const;
    static VectorStore load(const std::filesystem::path& path);

private:
    mutable std::shared_mutex mutex_;
    std::vector<IndexEntry> entries_;
    std::unordered_map<std::string, std::size_t> by_id_;
    std::size_t dim_ = 0;
};

} // namespace mmrag
