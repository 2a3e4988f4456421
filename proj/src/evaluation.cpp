#include "mmrag/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>
#include <unordered_set>

#include "mmrag/errors.hpp"

namespace mmrag {

std::string normalize_for_match(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char ch : text) {
        unsigned char c = static_cast<unsigned char>(ch);
        if (c < 0x80 && std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (c < 0x80 && std::ispunct(c)) continue;
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    }
    return out;
}

bool is_relevant(const ScoredChunk& chunk, const Evidence& evidence) {
    if (chunk.metadata.source != evidence.source) return false;
    return normalize_for_match(chunk.text).find(normalize_for_match(evidence.fact)) !=
           std::string::npos;
}

namespace {

// Non-null queries paired with their results, aligned by query_id.
std::vector<std::pair<const BenchmarkQuery*, const RetrievalResult*>> align_scoreable(
    const std::vector<RetrievalResult>& results, const std::vector<BenchmarkQuery>& queries) {
    std::unordered_map<std::string, const RetrievalResult*> by_id;
    for (const auto& r : results) by_id.emplace(r.query_id, &r);

    std::vector<std::pair<const BenchmarkQuery*, const RetrievalResult*>> pairs;
    for (const auto& q : queries) {
        if (q.question_type == QuestionType::Null) continue;
        auto it = by_id.find(q.query_id);
        if (it == by_id.end())
            throw AlignmentError("no retrieval result for query_id \"" + q.query_id + "\"");
        pairs.emplace_back(&q, it->second);
    }
    if (pairs.empty()) throw EmptyQuerySet();
    return pairs;
}

std::size_t top_k_size(const RetrievalResult& r, int k) {
    if (k <= 0) return 0;
    return std::min(r.chunks.size(), static_cast<std::size_t>(k));
}

} // namespace

double mrr_at_k(const std::vector<RetrievalResult>& results,
                const std::vector<BenchmarkQuery>& queries, int k) {
    auto pairs = align_scoreable(results, queries);
    double sum = 0.0;
    for (const auto& [q, r] : pairs) {
        std::size_t n = top_k_size(*r, k);
        for (std::size_t rank = 0; rank < n; ++rank) {
            bool relevant = std::any_of(q->evidence_list.begin(), q->evidence_list.end(),
                                        [&](const Evidence& ev) {
                                            return is_relevant(r->chunks[rank], ev);
                                        });
            if (relevant) {
                sum += 1.0 / double(rank + 1);
                break;
            }
        }
    }
    return sum / double(pairs.size());
}

double map_at_k(const std::vector<RetrievalResult>& results,
                const std::vector<BenchmarkQuery>& queries, int k) {
    auto pairs = align_scoreable(results, queries);
    double sum = 0.0;
    for (const auto& [q, r] : pairs) {
        std::size_t n = top_k_size(*r, k);
        std::vector<bool> credited(q->evidence_list.size(), false);
        std::size_t hits = 0;
        double precision_sum = 0.0;
        for (std::size_t rank = 0; rank < n; ++rank) {
            // each evidence item is creditable once, assigned greedily by rank
            for (std::size_t e = 0; e < q->evidence_list.size(); ++e) {
                if (credited[e]) continue;
                if (is_relevant(r->chunks[rank], q->evidence_list[e])) {
                    credited[e] = true;
                    ++hits;
                    precision_sum += double(hits) / double(rank + 1);
                    break;
                }
            }
        }
        std::size_t denom = std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 0)),
                                                  q->evidence_list.size());
        if (denom > 0) sum += precision_sum / double(denom);
    }
    return sum / double(pairs.size());
}

double hit_at_k(const std::vector<RetrievalResult>& results,
                const std::vector<BenchmarkQuery>& queries, int k) {
    auto pairs = align_scoreable(results, queries);
    std::size_t found = 0, total = 0;
    for (const auto& [q, r] : pairs) {
        std::size_t n = top_k_size(*r, k);
        total += q->evidence_list.size();
        for (const auto& ev : q->evidence_list) {
            for (std::size_t rank = 0; rank < n; ++rank) {
                if (is_relevant(r->chunks[rank], ev)) {
                    ++found;
                    break;
                }
            }
        }
    }
    return total == 0 ? 0.0 : double(found) / double(total);
}

RetrievalMetrics retrieval_metrics(const std::vector<RetrievalResult>& results,
                                   const std::vector<BenchmarkQuery>& queries, int k) {
    RetrievalMetrics m;
    m.k = k;
    m.mrr_at_k = mrr_at_k(results, queries, k);
    m.map_at_k = map_at_k(results, queries, k);
    m.hit_at_k = hit_at_k(results, queries, k);
    m.hit_at_4 = hit_at_k(results, queries, 4);
    for (const auto& q : queries) {
        if (q.question_type != QuestionType::Null) ++m.n_queries;
    }
    return m;
}

namespace {

const std::unordered_set<std::string>& stop_words() {
    static const std::unordered_set<std::string> set = {"a",  "an", "the", "is", "are", "was",
                                                        "were", "to", "of", "in", "on", "and",
                                                        "or"};
    return set;
}

std::unordered_set<std::string> answer_words(std::string_view text, bool strict) {
    std::unordered_set<std::string> words;
    std::string normalized = normalize_for_match(text);
    std::size_t i = 0;
    while (i < normalized.size()) {
        std::size_t sp = normalized.find(' ', i);
        if (sp == std::string::npos) sp = normalized.size();
        std::string word = normalized.substr(i, sp - i);
        if (!word.empty() && (strict || !stop_words().count(word))) words.insert(std::move(word));
        i = sp + 1;
    }
    return words;
}

} // namespace

AccuracyReport accuracy(const std::vector<GenerationResult>& responses,
                        const std::vector<BenchmarkQuery>& queries, bool strict) {
    std::unordered_map<std::string, const GenerationResult*> by_id;
    for (const auto& r : responses) by_id.emplace(r.query_id, &r);

    AccuracyReport report;
    report.n_queries = queries.size();
    std::map<QuestionType, std::size_t> correct_by_type;
    for (QuestionType t : {QuestionType::Inference, QuestionType::Comparison,
                           QuestionType::Temporal, QuestionType::Null}) {
        report.by_type[t] = 0.0;
        report.counts[t] = 0;
        correct_by_type[t] = 0;
    }

    std::size_t correct_total = 0;
    for (const auto& q : queries) {
        auto it = by_id.find(q.query_id);
        if (it == by_id.end())
            throw AlignmentError("no generation result for query_id \"" + q.query_id + "\"");
        ++report.counts[q.question_type];

        auto gold = answer_words(q.answer, strict);
        auto got = answer_words(it->second->response, strict);
        bool correct = std::any_of(got.begin(), got.end(),
                                   [&](const std::string& w) { return gold.count(w) > 0; });
        if (correct) {
            ++correct_total;
            ++correct_by_type[q.question_type];
        }
    }

    report.overall = queries.empty() ? 0.0 : double(correct_total) / double(queries.size());
    for (auto& [type, value] : report.by_type) {
        std::size_t n = report.counts[type];
        value = n == 0 ? 0.0 : double(correct_by_type[type]) / double(n);
    }
    return report;
}

} // namespace mmrag
