#include "sp/engine.hpp"

#include <algorithm>
#include <map>
#include <unordered_set>

namespace sp {

namespace {

constexpr double kScoreEps = 1e-9;

struct Scored {
    MultipleAlignment alignment;
    std::string key;
};

bool scored_better(const Scored& a, const Scored& b) {
    if (a.alignment.score() > b.alignment.score() + kScoreEps) return true;
    if (b.alignment.score() > a.alignment.score() + kScoreEps) return false;
    if (a.alignment.unified_bits() > b.alignment.unified_bits() + kScoreEps) return true;
    if (b.alignment.unified_bits() > a.alignment.unified_bits() + kScoreEps) return false;
    return a.key < b.key;
}

// Keeps the best representative of each structure, bounded to `limit`.
void add_to_pool(std::map<std::string, Scored>& pool, const Scored& s, std::size_t limit) {
    const std::string sk = s.alignment.structure_key();
    auto it = pool.find(sk);
    if (it == pool.end())
        pool.emplace(sk, s);
    else if (scored_better(s, it->second))
        it->second = s;
    if (pool.size() <= limit) return;
    auto worst = pool.begin();
    for (auto i = pool.begin(); i != pool.end(); ++i)
        if (scored_better(worst->second, i->second)) worst = i;
    pool.erase(worst);
}

}  // namespace

void EngineParams::check() const {
    match_budget.check();
    if (alignment_beam < 1 || max_stages < 1 || top_k < 1) throw Error("engine parameters must be >= 1");
}

std::vector<MultipleAlignment> build_alignments(const std::vector<Pattern>& new_patterns, const Grammar& grammar,
                                                const EngineParams& params, const RunOptions& options) {
    return build_alignments(new_patterns, grammar, grammar.table(), params, options);
}

std::vector<MultipleAlignment> build_alignments(const std::vector<Pattern>& new_patterns, const Grammar& grammar,
                                                const SymbolTable& table, const EngineParams& params,
                                                const RunOptions& options) {
    params.check();
    MultipleAlignment bare = MultipleAlignment::bare(new_patterns);
    bare.set_score(0);

    std::map<std::string, Scored> pool;
    add_to_pool(pool, Scored{bare, bare.serialize()}, params.top_k);

    std::vector<Scored> live{Scored{bare, bare.serialize()}};
    double best = 0;
    std::size_t stall = 0;
    for (std::size_t stage = 1; stage <= params.max_stages && !grammar.empty(); ++stage) {
        TaskBatch batch;
        batch.id = stage;
        for (std::size_t i = 0; i < live.size(); ++i)
            for (std::size_t j = 0; j < grammar.size(); ++j)
                batch.tasks.push_back(MatchTask{nullptr, &grammar[j], i, j, params.match_budget, &live[i].alignment,
                                                static_cast<long>(j)});
        const std::uint64_t hits0 = options.index ? options.index->hits() : 0;
        const std::uint64_t misses0 = options.index ? options.index->misses() : 0;
        auto results = map_reduce_matches(batch, table, options.workers, options.index);

        std::vector<Scored> candidates;
        std::unordered_set<std::string> seen;
        for (std::size_t t = 0; t < results.size(); ++t) {
            const std::size_t i = t / grammar.size(), j = t % grammar.size();
            for (const auto& hits : results[t]) {
                auto merged = merge(live[i].alignment, grammar[j], static_cast<long>(j), hits);
                if (!merged) continue;
                std::string key = merged->serialize();
                if (!seen.insert(key).second) continue;
                merged->set_score(compression_difference(*merged, table));
                merged->set_unified_bits(unified_bits(*merged, table));
                candidates.push_back(Scored{std::move(*merged), std::move(key)});
            }
        }
        std::sort(candidates.begin(), candidates.end(), scored_better);

        if (options.audit) {
            StageAudit audit{stage, {}, 0, 0, options.workers};
            if (options.index) {
                audit.index_hits = options.index->hits() - hits0;
                audit.index_misses = options.index->misses() - misses0;
            }
            for (std::size_t k = 0; k < candidates.size(); ++k)
                audit.candidates.push_back(
                    AuditCandidate{candidates[k].key, candidates[k].alignment.score(), k < params.alignment_beam});
            std::sort(audit.candidates.begin(), audit.candidates.end(),
                      [](const AuditCandidate& a, const AuditCandidate& b) { return a.serialization < b.serialization; });
            options.audit(audit);
        }
        if (candidates.empty()) break;

        if (candidates.size() > params.alignment_beam) candidates.resize(params.alignment_beam);
        for (const auto& c : candidates) add_to_pool(pool, c, params.top_k);
        const bool improved = candidates.front().alignment.score() > best + kScoreEps;
        if (improved) best = candidates.front().alignment.score();
        live = std::move(candidates);
        if (improved)
            stall = 0;
        else if (++stall > params.patience)
            break;
    }

    std::vector<Scored> ranked;
    for (auto& [k, s] : pool) ranked.push_back(std::move(s));
    std::sort(ranked.begin(), ranked.end(), scored_better);
    std::vector<MultipleAlignment> out;
    for (std::size_t k = 0; k < ranked.size() && k < params.top_k; ++k) out.push_back(std::move(ranked[k].alignment));
    return out;
}

}  // namespace sp
