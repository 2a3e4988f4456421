#include "mmrag/vector_store.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <mutex>

#include "mmrag/errors.hpp"

namespace mmrag {

namespace {

constexpr char kMagic[] = "MMRAG-VS1";
constexpr std::size_t kMagicLen = sizeof(kMagic) - 1;

void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(buf), 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(buf), 8);
}

void write_f64(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    write_u64(out, bits);
}

void write_str(std::ostream& out, const std::string& s) {
    write_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char buf[4];
    if (!in.read(reinterpret_cast<char*>(buf), 4)) throw FormatError("truncated store file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(buf[i]) << (8 * i);
    return v;
}

std::uint64_t read_u64(std::istream& in) {
    unsigned char buf[8];
    if (!in.read(reinterpret_cast<char*>(buf), 8)) throw FormatError("truncated store file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(buf[i]) << (8 * i);
    return v;
}

double read_f64(std::istream& in) {
    std::uint64_t bits = read_u64(in);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

std::string read_str(std::istream& in) {
    std::uint32_t len = read_u32(in);
    std::string s(len, '\0');
    if (len > 0 && !in.read(s.data(), len)) throw FormatError("truncated store file");
    return s;
}

bool result_before(const ScoredChunk& a, const ScoredChunk& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.chunk_id < b.chunk_id;
}

} // namespace

double cosine_similarity(const Embedding& a, const Embedding& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        dot += a.values[i] * b.values[i];
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

VectorStore::VectorStore(VectorStore&& other) noexcept {
    std::unique_lock lock(other.mutex_);
    entries_ = std::move(other.entries_);
    by_id_ = std::move(other.by_id_);
    dim_ = other.dim_;
}

VectorStore& VectorStore::operator=(VectorStore&& other) noexcept {
    if (this != &other) {
        std::scoped_lock lock(mutex_, other.mutex_);
        entries_ = std::move(other.entries_);
        by_id_ = std::move(other.by_id_);
        dim_ = other.dim_;
    }
    return *this;
}

std::size_t VectorStore::upsert(std::vector<IndexEntry> entries) {
    std::unique_lock lock(mutex_);
    std::size_t dim = dim_;
    for (const auto& e : entries) {
        if (e.embedding.dim() == 0) throw DimensionMismatch(dim == 0 ? 1 : dim, 0);
        if (dim == 0)
            dim = e.embedding.dim();
        else if (e.embedding.dim() != dim)
            throw DimensionMismatch(dim, e.embedding.dim());
    }
    dim_ = dim;
    std::size_t written = 0;
    for (auto& e : entries) {
        auto it = by_id_.find(e.chunk_id);
        if (it != by_id_.end()) {
            entries_[it->second] = std::move(e);
        } else {
            by_id_.emplace(e.chunk_id, entries_.size());
            entries_.push_back(std::move(e));
        }
        ++written;
    }
    return written;
}

std::vector<ScoredChunk> VectorStore::search(const Embedding& query, const FilterExpr& filter,
                                             std::size_t k) const {
    std::shared_lock lock(mutex_);
    if (entries_.empty() || k == 0) return {};
    if (query.dim() != dim_) throw DimensionMismatch(dim_, query.dim());

    std::vector<ScoredChunk> scored;
    scored.reserve(entries_.size());
    for (const auto& e : entries_) {
        if (!matches(filter, e.metadata)) continue;
        scored.push_back(ScoredChunk{e.chunk_id, cosine_similarity(query, e.embedding), e.text,
                                     e.metadata});
    }
    if (scored.size() > k) {
        std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k),
                          scored.end(), result_before);
        scored.resize(k);
    } else {
        std::sort(scored.begin(), scored.end(), result_before);
    }
    return scored;
}

std::size_t VectorStore::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

std::size_t VectorStore::dim() const {
    std::shared_lock lock(mutex_);
    return dim_;
}

void VectorStore::save(const std::filesystem::path& path) const {
    std::shared_lock lock(mutex_);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write store file: " + path.string());

    out.write(kMagic, kMagicLen);
    write_u32(out, static_cast<std::uint32_t>(dim_));
    write_u64(out, entries_.size());
    for (const auto& e : entries_) {
        write_str(out, e.chunk_id);
        write_str(out, e.metadata.source);
        write_str(out, e.metadata.published_at);
        write_str(out, e.metadata.title);
        write_str(out, e.text);
        for (double v : e.embedding.values) write_f64(out, v);
    }
    if (!out) throw IoError("write failed: " + path.string());
}

VectorStore VectorStore::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open store file: " + path.string());

    char magic[kMagicLen];
    if (!in.read(magic, kMagicLen) || std::memcmp(magic, kMagic, kMagicLen) != 0)
        throw FormatError("bad store magic in " + path.string());

    VectorStore store;
    store.dim_ = read_u32(in);
    std::uint64_t count = read_u64(in);
    // a corrupt count surfaces as truncation below, not as a giant allocation
    store.entries_.reserve(std::min<std::uint64_t>(count, 1u << 20));
    for (std::uint64_t i = 0; i < count; ++i) {
        IndexEntry e;
        e.chunk_id = read_str(in);
        e.metadata.source = read_str(in);
        e.metadata.published_at = read_str(in);
        e.metadata.title = read_str(in);
        e.text = read_str(in);
        e.embedding.values.resize(store.dim_);
        for (std::size_t d = 0; d < store.dim_; ++d) e.embedding.values[d] = read_f64(in);
        store.by_id_.emplace(e.chunk_id, store.entries_.size());
        store.entries_.push_back(std::move(e));
    }
    return store;
}

} // namespace mmrag
