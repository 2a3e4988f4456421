/*
 * mmrag C API: metadata-filtered vector retrieval and RAG benchmark runs
 * behind a shared-library boundary.
 *
 * Conventions:
 *   - functions return MMRAG_OK (0) or an MMRAG_ERR_* code
 *   - objects are opaque handles released with their *_free function
 *   - strings written to an out-parameter are heap-allocated and must be
 *     released with mmrag_string_free
 *   - `err_out` (when non-NULL) receives a human-readable message on failure
 */

#ifndef MMRAG_H
#define MMRAG_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#define MMRAG_OK 0
#define MMRAG_ERR_IO 1
#define MMRAG_ERR_PARSE 2
#define MMRAG_ERR_DATE_FORMAT 3
#define MMRAG_ERR_SCHEMA 4
#define MMRAG_ERR_DIMENSION 5
#define MMRAG_ERR_FORMAT 6
#define MMRAG_ERR_PROVIDER 7
#define MMRAG_ERR_FIXTURE_MISS 8
#define MMRAG_ERR_ALIGNMENT 9
#define MMRAG_ERR_EMPTY_QUERY_SET 10
#define MMRAG_ERR_CONFIG 11
#define MMRAG_ERR_INVALID_ARGUMENT 12
#define MMRAG_ERR_UNKNOWN 99

typedef struct mmrag_filter mmrag_filter;
typedef struct mmrag_store mmrag_store;

const char* mmrag_version(void);
void mmrag_string_free(char* s);

/* ------------------------------------------------------------------ */
/* Filters                                                             */
/* ------------------------------------------------------------------ */

/*
 * Parses the first well-formed filter dictionary in `text` (strict JSON or
 * single-quoted dictionary syntax, prose tolerated) and normalizes it against
 * the closed source catalog. The result matches everything when nothing
 * usable survives normalization.
 */
int mmrag_filter_parse(const char* text, const char* const* catalog, size_t catalog_len,
                       mmrag_filter** out, char** err_out);

/* Builds a filter from its strict-JSON rendering. */
int mmrag_filter_from_json(const char* json, mmrag_filter** out, char** err_out);

/* Strict-JSON rendering, e.g. {"source":{"$in":["TechCrunch"]}}. */
char* mmrag_filter_to_json(const mmrag_filter* filter);

/* Sets *result to 1 when metadata satisfies the filter, 0 otherwise. */
int mmrag_filter_matches(const mmrag_filter* filter, const char* source,
                         const char* published_at, int* result);

void mmrag_filter_free(mmrag_filter* filter);

/* Canonical date rendering ("December 2, 2023"); MMRAG_ERR_DATE_FORMAT when
 * no accepted layout matches. */
int mmrag_normalize_date(const char* text, char** out, char** err_out);

/* ------------------------------------------------------------------ */
/* Vector store                                                        */
/* ------------------------------------------------------------------ */

int mmrag_store_create(mmrag_store** out);
int mmrag_store_open(const char* path, mmrag_store** out, char** err_out);
int mmrag_store_save(const mmrag_store* store, const char* path, char** err_out);

int mmrag_store_upsert(mmrag_store* store, const char* chunk_id, const double* values, size_t dim,
                       const char* source, const char* published_at, const char* title,
                       const char* text, char** err_out);

/*
 * Filtered exact cosine top-k. `filter` may be NULL (match everything).
 * Results are written as a JSON array of {chunk_id, score, text, metadata}
 * objects, ordered by score descending with chunk_id as the tie-break.
 */
int mmrag_store_search(const mmrag_store* store, const double* query, size_t dim,
                       const mmrag_filter* filter, size_t k, char** results_json_out,
                       char** err_out);

size_t mmrag_store_size(const mmrag_store* store);
size_t mmrag_store_dim(const mmrag_store* store);
void mmrag_store_free(mmrag_store* store);

/* ------------------------------------------------------------------ */
/* Local deterministic embedding                                       */
/* ------------------------------------------------------------------ */

/* Writes the dim-dimensional hash embedding of `text` into out_values. */
int mmrag_embed_text(const char* text, size_t dim, double* out_values);

/* ------------------------------------------------------------------ */
/* Benchmark commands                                                  */
/* ------------------------------------------------------------------ */

/*
 * Runs one pipeline command with a JSON configuration document. Commands:
 * "ingest", "extract", "retrieve", "eval-retrieval", "generate",
 * "eval-generation". On success *report_json_out holds the command report
 * (also written under the configured results directory).
 */
int mmrag_run_command(const char* command, const char* config_json, char** report_json_out,
                      char** err_out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* MMRAG_H */
