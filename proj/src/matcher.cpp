#include "sp/matcher.hpp"

#include <algorithm>
#include <limits>
#include <unordered_map>

namespace sp {

namespace {

constexpr double kScoreEps = 1e-9;
constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

// next[pos * types + sym] = first index >= pos holding sym, kNone if absent.
std::vector<std::size_t> next_table(const std::vector<int>& seq, std::size_t types) {
    std::vector<std::size_t> next((seq.size() + 1) * types, kNone);
    for (std::size_t pos = seq.size(); pos-- > 0;) {
        std::copy_n(next.begin() + (pos + 1) * types, types, next.begin() + pos * types);
        if (seq[pos] >= 0) next[pos * types + seq[pos]] = pos;
    }
    return next;
}

// count[pos * types + sym] = occurrences of sym at index >= pos.
std::vector<std::size_t> suffix_counts(const std::vector<int>& seq, std::size_t types) {
    std::vector<std::size_t> count((seq.size() + 1) * types, 0);
    for (std::size_t pos = seq.size(); pos-- > 0;) {
        std::copy_n(count.begin() + (pos + 1) * types, types, count.begin() + pos * types);
        if (seq[pos] >= 0) ++count[pos * types + static_cast<std::size_t>(seq[pos])];
    }
    return count;
}

}  // namespace

std::string HitSequence::serialize() const {
    std::string out;
    for (const auto& h : hits) {
        if (!out.empty()) out += ',';
        out += std::to_string(h.driving_pos) + ':' + std::to_string(h.target_pos);
    }
    return out;
}

void SearchBudget::check() const {
    if (beam_width < 1 || max_alternatives < 1) throw Error("search budget values must be >= 1");
}

bool better(const HitSequence& a, const HitSequence& b) {
    if (a.score_bits > b.score_bits + kScoreEps) return true;
    if (b.score_bits > a.score_bits + kScoreEps) return false;
    return a.hits < b.hits;
}

bool valid_hit_sequence(const HitSequence& seq, const Pattern& driving, const Pattern& target) {
    for (std::size_t i = 0; i < seq.hits.size(); ++i) {
        const Hit& h = seq.hits[i];
        if (h.driving_pos >= driving.size() || h.target_pos >= target.size()) return false;
        if (driving[h.driving_pos].text != target[h.target_pos].text) return false;
        if (driving[h.driving_pos].is_separator()) return false;
        if (i > 0 && (h.driving_pos <= seq.hits[i - 1].driving_pos || h.target_pos <= seq.hits[i - 1].target_pos))
            return false;
    }
    return true;
}

std::vector<HitSequence> find_matches(const Pattern& driving, const Pattern& target, const SymbolTable& table,
                                      const SearchBudget& budget) {
    if (driving.empty() || target.empty()) throw Error("find_matches: empty pattern");
    budget.check();

    // Intern the symbol texts the two patterns share.
    std::unordered_map<std::string_view, int> in_target;
    for (const auto& s : target.symbols())
        if (!s.is_separator()) in_target.emplace(s.text, -1);
    std::vector<std::string_view> texts;
    std::vector<int> dseq(driving.size(), -1), tseq(target.size(), -1);
    for (std::size_t i = 0; i < driving.size(); ++i) {
        auto it = in_target.find(driving[i].text);
        if (it == in_target.end()) continue;
        if (it->second < 0) {
            it->second = static_cast<int>(texts.size());
            texts.push_back(it->first);
        }
        dseq[i] = it->second;
    }
    if (texts.empty()) return {};
    for (std::size_t j = 0; j < target.size(); ++j) {
        auto it = in_target.find(target[j].text);
        if (it != in_target.end()) tseq[j] = it->second;
    }
    const std::size_t types = texts.size();
    std::vector<double> cost(types);
    for (std::size_t s = 0; s < types; ++s) cost[s] = table.cost(texts[s]);
    const auto dnext = next_table(dseq, types);
    const auto tnext = next_table(tseq, types);

    const auto dcount = suffix_counts(dseq, types);
    const auto tcount = suffix_counts(tseq, types);
    // Frontier rank: score plus an upper bound on what can still be matched.
    auto potential = [&](const HitSequence& seq) {
        const Hit& last = seq.hits.back();
        double bound = 0;
        for (std::size_t s = 0; s < types; ++s)
            bound += static_cast<double>(std::min(dcount[(last.driving_pos + 1) * types + s],
                                                  tcount[(last.target_pos + 1) * types + s])) *
                     cost[s];
        return seq.score_bits + bound;
    };
    struct Entry {
        double rank;
        HitSequence seq;
    };
    // Max-heap order: rank desc, then `better`.
    auto lower = [](const Entry& a, const Entry& b) {
        if (a.rank > b.rank + kScoreEps) return false;
        if (b.rank > a.rank + kScoreEps) return true;
        return better(b.seq, a.seq);
    };
    std::vector<Entry> frontier;
    auto push = [&](HitSequence seq) {
        const double r = potential(seq);
        frontier.push_back(Entry{r, std::move(seq)});
        std::push_heap(frontier.begin(), frontier.end(), lower);
    };
    for (std::size_t i = 0; i < driving.size(); ++i) {
        if (dseq[i] < 0) continue;
        for (std::size_t j = 0; j < target.size(); ++j)
            if (tseq[j] == dseq[i]) push(HitSequence{{Hit{i, j}}, cost[dseq[i]]});
    }

    // Best-first: the first n expansions are the same for every budget above
    // n, so a larger beam_width never loses a sequence a smaller one visits.
    const std::size_t expansions = budget.beam_width * (driving.size() + target.size());
    std::vector<HitSequence> pool;
    for (std::size_t done = 0; done < expansions && !frontier.empty(); ++done) {
        // Nothing left can enter the kept alternatives.
        if (pool.size() == budget.max_alternatives && frontier.front().rank < pool.back().score_bits - kScoreEps)
            break;
        std::pop_heap(frontier.begin(), frontier.end(), lower);
        HitSequence seq = std::move(frontier.back().seq);
        frontier.pop_back();

        const Hit last = seq.hits.back();
        if (budget.exhaustive) {
            for (std::size_t d = last.driving_pos + 1; d < driving.size(); ++d)
                for (std::size_t t = last.target_pos + 1; t < target.size(); ++t)
                    if (dseq[d] >= 0 && dseq[d] == tseq[t]) {
                        HitSequence ext = seq;
                        ext.hits.push_back(Hit{d, t});
                        ext.score_bits += cost[static_cast<std::size_t>(dseq[d])];
                        push(std::move(ext));
                    }
        } else {
            for (std::size_t s = 0; s < types; ++s) {
                const std::size_t d = dnext[(last.driving_pos + 1) * types + s];
                if (d == kNone) continue;
                const std::size_t t = tnext[(last.target_pos + 1) * types + s];
                if (t == kNone) continue;
                HitSequence ext = seq;
                ext.hits.push_back(Hit{d, t});
                ext.score_bits += cost[s];
                push(std::move(ext));
            }
        }
        auto at = std::lower_bound(pool.begin(), pool.end(), seq, better);
        pool.insert(at, std::move(seq));
        if (pool.size() > budget.max_alternatives) pool.pop_back();
    }
    return pool;
}

HitSequence brute_force_best_match(const Pattern& driving, const Pattern& target, const SymbolTable& table) {
    const std::size_t n = driving.size(), m = target.size();
    if (n == 0 || m == 0) throw Error("brute_force_best_match: empty pattern");
    if (n * m > 10000) throw Error("brute_force_best_match: size bound exceeded");
    std::vector<double> dp((n + 1) * (m + 1), 0.0);
    auto at = [&](std::size_t i, std::size_t j) -> double& { return dp[i * (m + 1) + j]; };
    for (std::size_t i = 1; i <= n; ++i)
        for (std::size_t j = 1; j <= m; ++j) {
            double best = std::max(at(i - 1, j), at(i, j - 1));
            if (driving[i - 1].text == target[j - 1].text && !driving[i - 1].is_separator())
                best = std::max(best, at(i - 1, j - 1) + table.cost(driving[i - 1].text));
            at(i, j) = best;
        }
    HitSequence out;
    out.score_bits = at(n, m);
    for (std::size_t i = n, j = m; i > 0 && j > 0;) {
        if (driving[i - 1].text == target[j - 1].text && !driving[i - 1].is_separator() &&
            at(i, j) == at(i - 1, j - 1) + table.cost(driving[i - 1].text)) {
            out.hits.push_back(Hit{i - 1, j - 1});
            --i;
            --j;
        } else if (at(i, j) == at(i - 1, j)) {
            --i;
        } else {
            --j;
        }
    }
    std::reverse(out.hits.begin(), out.hits.end());
    return out;
}

}  // namespace sp
