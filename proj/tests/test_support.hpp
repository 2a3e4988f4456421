#pragma once

// Shared helpers for the test suites: temp directories, independent oracles
// (set-expansion filter evaluation, brute-force search, reference metrics),
// random-instance generators, and the constructed wrong-source-distractor
// benchmark used by the pipeline, CLI, and acceptance suites. Everything here
// is deliberately written against the declared contracts, not against the
// library code paths it checks.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>
#include <unistd.h>

#include "mmrag/benchmark.hpp"
#include "mmrag/filter_engine.hpp"
#include "mmrag/vector_store.hpp"

namespace testsupport {

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<unsigned> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("mmrag_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path file(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::trunc);
    out << text;
}

inline void write_json(const std::filesystem::path& p, const nlohmann::json& j) {
    write_text(p, j.dump(2));
}

// ---------------------------------------------------------------------------
// Filter oracle: expands a FilterExpr into the explicit set of admissible
// (source, published_at) tuples over a finite metadata universe.
// ---------------------------------------------------------------------------

inline std::set<std::pair<std::string, std::string>> expand_admissible(
    const mmrag::FilterExpr& filter, const std::vector<std::string>& sources,
    const std::vector<std::string>& dates) {
    auto allowed = [](const std::optional<mmrag::OperatorClause>& clause,
                      const std::vector<std::string>& universe) {
        std::set<std::string> out(universe.begin(), universe.end());
        if (!clause) return out;
        std::set<std::string> listed(clause->values.begin(), clause->values.end());
        std::set<std::string> kept;
        for (const auto& v : out) {
            bool member = listed.count(v) > 0;
            if (clause->op == mmrag::FilterOp::In ? member : !member) kept.insert(v);
        }
        return kept;
    };

    std::set<std::pair<std::string, std::string>> admissible;
    for (const auto& s : allowed(filter.source, sources))
        for (const auto& d : allowed(filter.published_at, dates)) admissible.emplace(s, d);
    return admissible;
}

// ---------------------------------------------------------------------------
// Search oracle: filter, score with an independently associated cosine,
// stable-sort, truncate.
// ---------------------------------------------------------------------------

inline double oracle_cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / std::sqrt(na * nb);
}

inline std::vector<mmrag::ScoredChunk> brute_force_search(
    const std::vector<mmrag::IndexEntry>& entries, const mmrag::Embedding& query,
    const mmrag::FilterExpr& filter, std::size_t k) {
    std::vector<mmrag::ScoredChunk> scored;
    for (const auto& e : entries) {
        if (!mmrag::matches(filter, e.metadata)) continue;
        scored.push_back(mmrag::ScoredChunk{
            e.chunk_id, oracle_cosine(query.values, e.embedding.values), e.text, e.metadata});
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const mmrag::ScoredChunk& a, const mmrag::ScoredChunk& b) {
                         if (a.score != b.score) return a.score > b.score;
                         return a.chunk_id < b.chunk_id;
                     });
    if (scored.size() > k) scored.resize(k);
    return scored;
}

// ---------------------------------------------------------------------------
// Reference retrieval metrics over a designed relevance matrix.
// rel[rank][evidence] states whether the chunk at `rank` supports the
// evidence item; the instances are constructed so this matrix is known
// independently of is_relevant.
// ---------------------------------------------------------------------------

using RelevanceMatrix = std::vector<std::vector<bool>>; // [rank][evidence]

// Evidence counts ride along explicitly: a query with zero retrieved chunks
// still contributes its evidence to the Hit@K denominator.
struct QueryRelevance {
    std::size_t n_evidence = 0;
    RelevanceMatrix rel;
};

struct MetricInstance {
    std::vector<QueryRelevance> queries;
};

inline double ref_mrr_at_k(const MetricInstance& inst, int k) {
    double sum = 0.0;
    for (const auto& q : inst.queries) {
        std::size_t limit = std::min<std::size_t>(q.rel.size(), k < 0 ? 0 : std::size_t(k));
        for (std::size_t r = 0; r < limit; ++r) {
            bool any = false;
            for (bool b : q.rel[r]) any = any || b;
            if (any) {
                sum += 1.0 / double(r + 1);
                break;
            }
        }
    }
    return inst.queries.empty() ? 0.0 : sum / double(inst.queries.size());
}

inline double ref_map_at_k(const MetricInstance& inst, int k) {
    double sum = 0.0;
    for (const auto& q : inst.queries) {
        std::size_t limit = std::min<std::size_t>(q.rel.size(), k < 0 ? 0 : std::size_t(k));
        std::vector<bool> used(q.n_evidence, false);
        double ap = 0.0;
        std::size_t hits = 0;
        for (std::size_t r = 0; r < limit; ++r) {
            for (std::size_t e = 0; e < q.n_evidence; ++e) {
                if (!used[e] && q.rel[r][e]) {
                    used[e] = true;
                    ++hits;
                    ap += double(hits) / double(r + 1);
                    break;
                }
            }
        }
        std::size_t denom = std::min<std::size_t>(std::size_t(std::max(k, 0)), q.n_evidence);
        if (denom > 0) sum += ap / double(denom);
    }
    return inst.queries.empty() ? 0.0 : sum / double(inst.queries.size());
}

inline double ref_hit_at_k(const MetricInstance& inst, int k) {
    std::size_t found = 0, total = 0;
    for (const auto& q : inst.queries) {
        std::size_t limit = std::min<std::size_t>(q.rel.size(), k < 0 ? 0 : std::size_t(k));
        total += q.n_evidence;
        for (std::size_t e = 0; e < q.n_evidence; ++e) {
            for (std::size_t r = 0; r < limit; ++r) {
                if (q.rel[r][e]) {
                    ++found;
                    break;
                }
            }
        }
    }
    return total == 0 ? 0.0 : double(found) / double(total);
}

struct BuiltMetricInstance {
    std::vector<mmrag::BenchmarkQuery> queries;
    std::vector<std::vector<mmrag::ScoredChunk>> ranked; // per query
    MetricInstance designed;
};

// Materializes benchmark queries, evidence, and ranked chunk lists realizing
// a randomly designed relevance matrix. Fact tokens are fixed-width so no
// fact is a substring of another.
inline BuiltMetricInstance build_metric_instance(std::mt19937_64& rng, std::size_t n_queries,
                                                 std::size_t max_evidence,
                                                 std::size_t max_chunks) {
    std::uniform_int_distribution<std::size_t> ev_count(1, max_evidence);
    std::uniform_int_distribution<std::size_t> ch_count(0, max_chunks);
    std::uniform_int_distribution<int> coin(0, 1);
    std::uniform_int_distribution<int> src_pick(0, 1);
    const std::vector<std::string> source_pool = {"Alpha Wire", "Beta Post"};

    BuiltMetricInstance built;
    for (std::size_t qi = 0; qi < n_queries; ++qi) {
        std::size_t n_ev = ev_count(rng);
        std::size_t n_ch = ch_count(rng);

        mmrag::BenchmarkQuery q;
        q.query_id = "q" + std::to_string(qi);
        q.query = "synthetic question " + std::to_string(qi);
        q.answer = "yes";
        q.question_type = mmrag::QuestionType::Inference;

        std::vector<std::string> ev_sources(n_ev);
        for (std::size_t e = 0; e < n_ev; ++e) {
            mmrag::Evidence ev;
            ev.source = source_pool[src_pick(rng)];
            ev_sources[e] = ev.source;
            ev.fact = "fq" + std::to_string(qi) + "e" + std::to_string(e) + "z";
            ev.title = "t";
            q.evidence_list.push_back(std::move(ev));
        }

        RelevanceMatrix rel(n_ch, std::vector<bool>(n_ev, false));
        std::vector<mmrag::ScoredChunk> chunks;
        for (std::size_t c = 0; c < n_ch; ++c) {
            mmrag::ScoredChunk chunk;
            chunk.chunk_id = "q" + std::to_string(qi) + "c" + std::to_string(c);
            chunk.score = 1.0 - 0.01 * double(c);
            chunk.metadata.source = source_pool[src_pick(rng)];
            std::string text = "chunk body " + std::to_string(c);
            for (std::size_t e = 0; e < n_ev; ++e) {
                bool include_fact = coin(rng) == 1;
                if (include_fact) {
                    text += " " + q.evidence_list[e].fact;
                    rel[c][e] = ev_sources[e] == chunk.metadata.source;
                }
            }
            chunk.text = text;
            chunks.push_back(std::move(chunk));
        }

        built.designed.queries.push_back(QueryRelevance{n_ev, std::move(rel)});
        built.ranked.push_back(std::move(chunks));
        built.queries.push_back(std::move(q));
    }
    return built;
}

// ---------------------------------------------------------------------------
// Constructed directional benchmark: distractor chunks from wrong sources
// dominate raw cosine ranking, so unfiltered retrieval misses every gold
// chunk while filtered retrieval cannot.
// ---------------------------------------------------------------------------

struct DirectionalFixture {
    nlohmann::json corpus;            // article records
    nlohmann::json queries;           // benchmark query records
    nlohmann::json extractor_fixtures; // scripted filter-extraction responses
    nlohmann::json generator_fixtures; // scripted answer-generation responses
    std::vector<std::string> gold_sources;
    std::vector<std::string> distractor_sources;
};

inline DirectionalFixture make_directional_fixture() {
    DirectionalFixture fx;
    fx.gold_sources = {"Amber Courier", "Basalt Herald", "Cobalt Tribune", "Drift Gazette"};
    fx.distractor_sources = {"Echo Bulletin", "Fathom Daily", "Garnet Journal"};

    fx.corpus = nlohmann::json::array();
    fx.queries = nlohmann::json::array();
    fx.extractor_fixtures = nlohmann::json::array();
    fx.generator_fixtures = nlohmann::json::array();

    const std::size_t n_queries = fx.gold_sources.size();
    std::vector<std::string> bait_tokens; // shared query vocabulary the distractors soak up
    for (std::size_t i = 0; i < n_queries; ++i) {
        for (int t = 0; t < 5; ++t)
            bait_tokens.push_back("bait" + std::to_string(i) + "x" + std::to_string(t));
    }

    for (std::size_t i = 0; i < n_queries; ++i) {
        const std::string& source = fx.gold_sources[i];
        std::string fact = "relic" + std::to_string(i) + " marble" + std::to_string(i) +
                           " lantern" + std::to_string(i);
        std::string bait;
        for (int t = 0; t < 5; ++t) bait += " bait" + std::to_string(i) + "x" + std::to_string(t);

        std::string question = "What did the report say about " + fact + bait + "?";

        // gold article: contains the fact plus enough neutral padding that its
        // raw cosine similarity stays below every distractor's
        std::string body = "The " + fact + " finding was confirmed on site. ";
        body += "Reviewers catalogued specimen drawer entries throughout autumn. ";
        body += "Curators measured humidity levels beside storage cabinets daily. ";
        body += "Archivists rebound damaged folios using linen thread.";
        fx.corpus.push_back({{"title", "Gold article " + std::to_string(i)},
                             {"source", source},
                             {"published_at", "December " + std::to_string(i + 1) + ", 2023"},
                             {"category", "news"},
                             {"url", "https://example.test/gold" + std::to_string(i)},
                             {"body", body}});

        fx.queries.push_back(
            {{"query", question},
             {"answer", "relic" + std::to_string(i)},
             {"question_type", i % 2 == 0 ? "inference_query" : "comparison_query"},
             {"evidence_list", nlohmann::json::array({{{"title", "Gold article " + std::to_string(i)},
                                                       {"source", source},
                                                       {"published_at",
                                                        "December " + std::to_string(i + 1) +
                                                            ", 2023"},
                                                       {"fact", fact}}})}});

        fx.extractor_fixtures.push_back(
            {{"contains", question},
             {"response", "{'source': {'$in': ['" + source + "']}}"}});
        fx.generator_fixtures.push_back(
            {{"contains", question}, {"response", "relic" + std::to_string(i)}});
    }

    // null query: no evidence, no usable source filter
    std::string null_question = "Which chronicle mentioned the zephyr monolith glacier accord?";
    fx.queries.push_back({{"query", null_question},
                          {"answer", "Insufficient information."},
                          {"question_type", "null_query"},
                          {"evidence_list", nlohmann::json::array()}});
    fx.extractor_fixtures.push_back({{"contains", null_question}, {"response", "{}"}});
    fx.generator_fixtures.push_back(
        {{"contains", null_question}, {"response", "Insufficient information."}});

    // distractor articles: stuffed with every query's bait vocabulary, each
    // repeated so they dominate raw cosine ranking for all queries at once
    const int n_distractors = 26;
    for (int d = 0; d < n_distractors; ++d) {
        std::string body;
        for (int rep = 0; rep < 4; ++rep) {
            for (const auto& tok : bait_tokens) body += tok + " ";
        }
        body += "padding" + std::to_string(d) + " extra" + std::to_string(d) + ".";
        fx.corpus.push_back(
            {{"title", "Distractor " + std::to_string(d)},
             {"source", fx.distractor_sources[std::size_t(d) % fx.distractor_sources.size()]},
             {"published_at", "November " + std::to_string((d % 27) + 1) + ", 2023"},
             {"category", "noise"},
             {"url", "https://example.test/d" + std::to_string(d)},
             {"body", body}});
    }
    return fx;
}

} // namespace testsupport
