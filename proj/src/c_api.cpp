#include "mmrag/mmrag.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "mmrag/commands.hpp"
#include "mmrag/errors.hpp"
#include "mmrag/filter_engine.hpp"
#include "mmrag/providers.hpp"
#include "mmrag/vector_store.hpp"

struct mmrag_filter {
    mmrag::FilterExpr expr;
};

struct mmrag_store {
    mmrag::VectorStore store;
};

namespace {

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) return nullptr;
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void set_err(char** err_out, const std::string& message) {
    if (err_out) *err_out = dup_string(message);
}

int code_of(const mmrag::Error& e) { return static_cast<int>(e.code()); }

// Runs `fn`, translating exceptions into error codes + messages.
template <typename Fn>
int guarded(char** err_out, Fn&& fn) {
    try {
        return fn();
    } catch (const mmrag::Error& e) {
        set_err(err_out, e.what());
        return code_of(e);
    } catch (const std::bad_alloc&) {
        set_err(err_out, "out of memory");
        return MMRAG_ERR_UNKNOWN;
    } catch (const std::exception& e) {
        set_err(err_out, e.what());
        return MMRAG_ERR_UNKNOWN;
    }
}

} // namespace

extern "C" {

const char* mmrag_version(void) { return "1.0.0"; }

void mmrag_string_free(char* s) { std::free(s); }

int mmrag_filter_parse(const char* text, const char* const* catalog, size_t catalog_len,
                       mmrag_filter** out, char** err_out) {
    if (!text || !out || (catalog_len > 0 && !catalog)) {
        set_err(err_out, "null argument");
        return MMRAG_ERR_INVALID_ARGUMENT;
    }
    return guarded(err_out, [&] {
        std::vector<std::string> cat(catalog, catalog + catalog_len);
        mmrag::RawFilter raw = mmrag::parse_filter(text);
        auto* handle = new mmrag_filter{mmrag::normalize_filter(raw, cat)};
        *out = handle;
        return MMRAG_OK;
    });
}

int mmrag_filter_from_json(const char* json, mmrag_filter** out, char** err_out) {
    if (!json || !out) {
        set_err(err_out, "null argument");
        return MMRAG_ERR_INVALID_ARGUMENT;
    }
    return guarded(err_out, [&] {
        nlohmann::json j = nlohmann::json::parse(json);
        *out = new mmrag_filter{mmrag::filter_from_json(j)};
        return MMRAG_OK;
    });
}

char* mmrag_filter_to_json(const mmrag_filter* filter) {
    if (!filter) return nullptr;
    return dup_string(mmrag::to_json_string(filter->expr));
}

int mmrag_filter_matches(const mmrag_filter* filter, const char* source,
                         const char* published_at, int* result) {
    if (!filter || !result) return MMRAG_ERR_INVALID_ARGUMENT;
    mmrag::ChunkMetadata meta;
    meta.source = source ? source : "";
    meta.published_at = published_at ? published_at : "";
    *result = mmrag::matches(filter->expr, meta) ? 1 : 0;
    return MMRAG_OK;
}

void mmrag_filter_free(mmrag_filter* filter) { delete filter; }

int mmrag_normalize_date(const char* text, char** out, char** err_out) {
    if (!text || !out) {
        set_err(err_out, "null argument");
        return MMRAG_ERR_INVALID_ARGUMENT;
    }
    return guarded(err_out, [&] {
        *out = dup_string(mmrag::normalize_date(text));
        return MMRAG_OK;
    });
}

int mmrag_store_create(mmrag_store** out) {
    if (!out) return MMRAG_ERR_INVALID_ARGUMENT;
    *out = new (std::nothrow) mmrag_store{};
    return *out ? MMRAG_OK : MMRAG_ERR_UNKNOWN;
}

int mmrag_store_open(const char* path, mmrag_store** out, char** err_out) {
    if (!path || !out) {
        set_err(err_out, "null argument");
        return MMRAG_ERR_INVALID_ARGUMENT;
    }
    return guarded(err_out, [&] {
        auto* handle = new mmrag_store{};
        try {
            handle->store = mmrag::VectorStore::load(path);
        } catch (...) {
            delete handle;
            throw;
        }
        *out = handle;
        return MMRAG_OK;
    });
}

int mmrag_store_save(const mmrag_store* store, const char* path, char** err_out) {
    if (!store || !path) {
        set_err(err_out, "null argument");
        return MMRAG_ERR_INVALID_ARGUMENT;
    }
    return guarded(err_out, [&] {
        store->store.save(path);
        return MMRAG_OK;
    });
}

int mmrag_store_upsert(mmrag_store* store, const char* chunk_id, const double* values, size_t dim,
                       const char* source, const char* published_at, const char* title,
                       const char* text, char** err_out) {
    if (!store || !chunk_id || !values || dim == 0) {
        set_err(err_out, "null argument");
        return MMRAG_ERR_INVALID_ARGUMENT;
    }
    return guarded(err_out, [&] {
        mmrag::IndexEntry entry;
        entry.chunk_id = chunk_id;
        entry.embedding.values.assign(values, values + dim);
        entry.metadata.source = source ? source : "";
        entry.metadata.published_at = published_at ? published_at : "";
        entry.metadata.title = title ? title : "";
        entry.text = text ? text : "";
        store->store.upsert({std::move(entry)});
        return MMRAG_OK;
    });
}

int mmrag_store_search(const mmrag_store* store, const double* query, size_t dim,
                       const mmrag_filter* filter, size_t k, char** results_json_out,
                       char** err_out) {
    if (!store || !query || dim == 0 || !results_json_out) {
        set_err(err_out, "null argument");
        return MMRAG_ERR_INVALID_ARGUMENT;
    }
    return guarded(err_out, [&] {
        mmrag::Embedding q;
        q.values.assign(query, query + dim);
        mmrag::FilterExpr expr;
        if (filter) expr = filter->expr;
        auto results = store->store.search(q, expr, k);

        nlohmann::json j = nlohmann::json::array();
        for (const auto& r : results) {
            j.push_back({{"chunk_id", r.chunk_id},
                         {"score", r.score},
                         {"text", r.text},
                         {"metadata",
                          {{"source", r.metadata.source},
                           {"published_at", r.metadata.published_at},
                           {"title", r.metadata.title}}}});
        }
        *results_json_out = dup_string(j.dump());
        return MMRAG_OK;
    });
}

size_t mmrag_store_size(const mmrag_store* store) { return store ? store->store.size() : 0; }

size_t mmrag_store_dim(const mmrag_store* store) { return store ? store->store.dim() : 0; }

void mmrag_store_free(mmrag_store* store) { delete store; }

int mmrag_embed_text(const char* text, size_t dim, double* out_values) {
    if (!text || dim == 0 || !out_values) return MMRAG_ERR_INVALID_ARGUMENT;
    mmrag::HashEmbedder embedder(dim);
    mmrag::Embedding e = embedder.embed(text);
    std::memcpy(out_values, e.values.data(), dim * sizeof(double));
    return MMRAG_OK;
}

int mmrag_run_command(const char* command, const char* config_json, char** report_json_out,
                      char** err_out) {
    if (!command || !config_json) {
        set_err(err_out, "null argument");
        return MMRAG_ERR_INVALID_ARGUMENT;
    }
    return guarded(err_out, [&] {
        nlohmann::json config;
        try {
            config = nlohmann::json::parse(config_json);
        } catch (const nlohmann::json::exception& e) {
            throw mmrag::ConfigError(std::string("config is not valid JSON: ") + e.what());
        }
        nlohmann::json report = mmrag::run_command(command, config);
        if (report_json_out) *report_json_out = dup_string(report.dump(2));
        return MMRAG_OK;
    });
}

} // extern "C"
