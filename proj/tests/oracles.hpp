#pragma once

// Independent reference computations used by the unit and acceptance tests.

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "sp/alignment.hpp"
#include "sp/core.hpp"
#include "sp/engine.hpp"
#include "sp/io.hpp"
#include "sp/learner.hpp"

namespace sp::oracle {

// Best compression score over every alignment reachable by adding up to
// `max_rows` Old rows, each through any hit set that keeps columns acyclic.
// Hit sets are enumerated directly, not through the matcher; only merge
// builds the column order.
struct BestAlignment {
    double score = 0;
    MultipleAlignment alignment;
};

inline BestAlignment best_alignment(const std::vector<Pattern>& news, const Grammar& grammar,
                                    const SymbolTable& table, std::size_t max_rows) {
    BestAlignment best{0, MultipleAlignment::bare(news)};
    std::set<std::string> seen;
    std::function<void(const MultipleAlignment&, std::size_t)> grow = [&](const MultipleAlignment& a,
                                                                          std::size_t depth) {
        if (depth == max_rows) return;
        const auto& cols = a.columns();
        // reach[x][y]: y follows x through row successor edges.
        std::vector<std::vector<std::size_t>> succ(cols.size());
        for (std::size_t r = 0; r < a.rows().size(); ++r)
            for (std::size_t p = 0; p + 1 < a.rows()[r].pattern.size(); ++p)
                succ[a.column_of(r, p)].push_back(a.column_of(r, p + 1));
        std::vector<std::vector<bool>> reach(cols.size(), std::vector<bool>(cols.size(), false));
        for (std::size_t x = 0; x < cols.size(); ++x) {
            std::vector<std::size_t> stack(succ[x]);
            while (!stack.empty()) {
                const std::size_t y = stack.back();
                stack.pop_back();
                if (reach[x][y]) continue;
                reach[x][y] = true;
                stack.insert(stack.end(), succ[y].begin(), succ[y].end());
            }
        }
        for (std::size_t g = 0; g < grammar.size(); ++g) {
            const Pattern& old = grammar[g];
            // Each target position takes one matching column or none.
            std::vector<std::vector<std::size_t>> options(old.size());
            for (std::size_t t = 0; t < old.size(); ++t)
                for (std::size_t c = 0; c < cols.size(); ++c) {
                    if (a.symbol(cols[c].cells.front()).text != old[t].text) continue;
                    bool self = false;
                    for (const auto& cell : cols[c].cells)
                        self = self || (a.rows()[cell.row].source == static_cast<long>(g) && cell.pos == t);
                    if (!self) options[t].push_back(c);
                }
            HitSequence hits;
            std::function<void(std::size_t)> pick = [&](std::size_t t) {
                if (t == old.size()) {
                    if (hits.hits.empty()) return;
                    auto m = merge(a, old, static_cast<long>(g), hits);
                    if (!m) return;
                    if (!seen.insert(m->structure_key()).second) return;
                    const double score = compression_difference(*m, table);
                    if (score > best.score) best = BestAlignment{score, *m};
                    grow(*m, depth + 1);
                    return;
                }
                pick(t + 1);
                for (std::size_t c : options[t]) {
                    // A later hit may not reach an earlier one.
                    bool ok = true;
                    for (const Hit& h : hits.hits) ok = ok && h.driving_pos != c && !reach[c][h.driving_pos];
                    if (!ok) continue;
                    hits.hits.push_back(Hit{c, t});
                    pick(t + 1);
                    hits.hits.pop_back();
                }
            };
            pick(0);
        }
    };
    grow(MultipleAlignment::bare(news), 0);
    return best;
}

inline std::string random_symbol(std::mt19937_64& rng, std::size_t alphabet) {
    return std::string(1, static_cast<char>('a' + std::uniform_int_distribution<std::size_t>(0, alphabet - 1)(rng)));
}

// Maximum total cost of a common subsequence; the matcher's exact optimum.
inline double weighted_lcs(const Pattern& d, const Pattern& t, const SymbolTable& table) {
    std::vector<std::vector<double>> best(d.size() + 1, std::vector<double>(t.size() + 1, 0));
    for (std::size_t i = 1; i <= d.size(); ++i)
        for (std::size_t j = 1; j <= t.size(); ++j) {
            best[i][j] = std::max(best[i - 1][j], best[i][j - 1]);
            if (d[i - 1].text == t[j - 1].text)
                best[i][j] = std::max(best[i][j], best[i - 1][j - 1] + table.cost(d[i - 1].text));
        }
    return best[d.size()][t.size()];
}

inline std::vector<std::string> random_texts(std::mt19937_64& rng, std::size_t len, std::size_t alphabet) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < len; ++i) out.push_back(random_symbol(rng, alphabet));
    return out;
}

// Every symbol of the alphabet at the same count, so costs are uniform.
inline SymbolTable uniform_table(std::size_t alphabet) {
    std::map<std::string, std::uint64_t> counts;
    for (std::size_t i = 0; i < alphabet; ++i) counts[std::string(1, static_cast<char>('a' + i))] = 1;
    return SymbolTable(counts);
}

// Grammar total after frequencies are set to usage and unused patterns
// dropped, repeated until stable. Usage is read off the best alignments.
inline GrammarScore settled_score(Grammar& g, const Corpus& corpus, const EngineParams& engine) {
    for (int round = 0; round < 4; ++round) {
        const SymbolTable table = scoring_table(g, corpus);
        std::vector<std::uint64_t> usage(g.size(), 0);
        std::map<std::string, std::pair<Pattern, std::uint64_t>> counts;
        for (const auto& p : corpus.patterns) {
            auto [it, fresh] = counts.try_emplace(p.key(), p, 0);
            it->second.second += p.frequency();
        }
        for (const auto& [key, entry] : counts) {
            std::set<long> used;
            const auto found = build_alignments({entry.first}, g, table, engine);
            for (const auto& r : found.front().rows())
                if (r.source >= 0) used.insert(r.source);
            for (long u : used) usage[static_cast<std::size_t>(u)] += entry.second;
        }
        std::vector<Pattern> kept;
        bool changed = false;
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (usage[i] == 0) {
                changed = true;
                continue;
            }
            Pattern p = g[i];
            changed |= p.frequency() != usage[i];
            p.set_frequency(usage[i]);
            kept.push_back(p);
        }
        if (!changed) break;
        g = Grammar(kept);
    }
    return grammar_score(g, corpus, engine);
}

struct ClosureOptimum {
    double total;
    Grammar grammar;
    std::size_t visited;
};

// Breadth-first over every grammar reachable in `depth` steps, a step
// adding one candidate group derived from an alignment of a corpus pattern
// with the current grammar (top_k alignments) or, from the empty grammar,
// with another corpus pattern taken as Old. No beam.
inline ClosureOptimum closure_optimum(const Corpus& corpus, const EngineParams& engine, std::size_t depth) {
    std::vector<Pattern> distinct;
    std::set<std::string> seen_text;
    for (const auto& p : corpus.patterns)
        if (seen_text.insert(p.key()).second) distinct.push_back(p);
    IdSource ids(1000000);
    auto apply = [](const Grammar& base, const CandidateGroup& g) {
        std::vector<Pattern> out;
        for (std::size_t i = 0; i < base.size(); ++i)
            if (static_cast<long>(i) != g.replaces) out.push_back(base[i]);
        Grammar next(out);
        for (const auto& p : g.patterns) next.add(p);
        for (const auto& p : g.replacement) next.add(p);
        return next;
    };
    Grammar empty;
    ClosureOptimum best{settled_score(empty, corpus, engine).total, Grammar(), 1};
    std::vector<Grammar> frontier{Grammar()};
    std::set<std::string> seen{serialize_grammar(Grammar())};
    for (std::size_t level = 0; level < depth; ++level) {
        std::vector<Grammar> next;
        for (const auto& g : frontier) {
            std::vector<std::pair<Grammar, CandidateGroup>> steps;
            const SymbolTable table = scoring_table(g, corpus);
            for (const auto& x : distinct) {
                for (const auto& a : build_alignments({x}, g, table, engine))
                    for (auto& c : derive_candidates(a, g, ids)) steps.emplace_back(g, std::move(c));
                if (!g.empty()) continue;
                for (const auto& y : distinct) {
                    if (y.key() == x.key()) continue;
                    const Grammar as_old({Pattern::make_plain(y.texts())});
                    const auto a = build_alignments({x}, as_old, scoring_table(as_old, corpus), engine).front();
                    for (auto& c : derive_candidates(a, as_old, ids)) {
                        for (auto& r : c.replacement) c.patterns.push_back(r);
                        c.replacement.clear();
                        c.replaces = -1;
                        steps.emplace_back(g, std::move(c));
                    }
                }
            }
            for (const auto& [base, c] : steps) {
                Grammar h = apply(base, c);
                if (!seen.insert(serialize_grammar(h)).second) continue;
                next.push_back(h);
                Grammar scored = h;
                const double total = settled_score(scored, corpus, engine).total;
                ++best.visited;
                if (total < best.total - 1e-9) best = {total, scored, best.visited};
            }
        }
        frontier = std::move(next);
    }
    return best;
}

}  // namespace sp::oracle
