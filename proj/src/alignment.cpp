#include "sp/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <limits>
#include <set>
#include <tuple>
#include <unordered_map>

namespace sp {

namespace {

constexpr double kScoreEps = 1e-9;

std::string pad3(std::size_t n) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%03zu", n);
    return buf;
}

}  // namespace

bool Column::has_row(std::size_t row) const noexcept {
    return std::any_of(cells.begin(), cells.end(), [&](const Cell& c) { return c.row == row; });
}

MultipleAlignment MultipleAlignment::bare(const std::vector<Pattern>& new_patterns) {
    if (new_patterns.empty()) throw Error("at least one New pattern is required");
    std::vector<std::string> joined;
    for (std::size_t i = 0; i < new_patterns.size(); ++i) {
        if (new_patterns[i].empty()) throw Error("empty New pattern");
        if (i > 0) joined.emplace_back(kNewSeparator);
        for (const auto& s : new_patterns[i].symbols()) joined.push_back(s.text);
    }
    MultipleAlignment a;
    a.rows_.push_back(Row{Pattern::make_new(joined, new_patterns.front().frequency()), -1});
    for (std::size_t i = 0; i < joined.size(); ++i) a.columns_.push_back(Column{{Cell{0, i}}});
    return a;
}

MultipleAlignment MultipleAlignment::from_parts(std::vector<Row> rows, std::vector<Column> columns) {
    MultipleAlignment a;
    a.rows_ = std::move(rows);
    a.columns_ = std::move(columns);
    for (auto& c : a.columns_) std::sort(c.cells.begin(), c.cells.end());
    a.check();
    return a;
}

void MultipleAlignment::check() const {
    if (rows_.empty()) throw Error("alignment has no rows");
    if (!rows_.front().pattern.is_new()) throw Error("row 0 must hold the New pattern");
    for (std::size_t r = 1; r < rows_.size(); ++r)
        if (rows_[r].pattern.is_new()) throw Error("rows other than 0 must hold Old patterns");
    std::vector<std::vector<long>> seen(rows_.size());
    for (std::size_t r = 0; r < rows_.size(); ++r) seen[r].assign(rows_[r].pattern.size(), -1);
    std::vector<long> last(rows_.size(), -1);
    for (std::size_t ci = 0; ci < columns_.size(); ++ci) {
        const Column& col = columns_[ci];
        if (col.cells.empty()) throw Error("empty column");
        for (std::size_t k = 0; k < col.cells.size(); ++k) {
            const Cell& c = col.cells[k];
            if (c.row >= rows_.size() || c.pos >= rows_[c.row].pattern.size()) throw Error("cell out of range");
            if (k > 0 && col.cells[k - 1].row == c.row) throw Error("column holds two symbols of one row");
            if (symbol(c).text != symbol(col.cells.front()).text) throw Error("column symbols differ");
            if (col.matched() && symbol(c).is_separator()) throw Error("separator cannot be matched");
            if (seen[c.row][c.pos] >= 0) throw Error("symbol position used twice");
            seen[c.row][c.pos] = static_cast<long>(ci);
            if (static_cast<long>(c.pos) <= last[c.row]) throw Error("columns cross: row order not preserved");
            last[c.row] = static_cast<long>(c.pos);
        }
    }
    for (const auto& row : seen)
        for (long v : row)
            if (v < 0) throw Error("symbol position missing from columns");
}

std::vector<const Column*> MultipleAlignment::matched_columns() const {
    std::vector<const Column*> out;
    for (const auto& c : columns_)
        if (c.matched()) out.push_back(&c);
    return out;
}

std::size_t MultipleAlignment::column_of(std::size_t row, std::size_t pos) const {
    for (std::size_t i = 0; i < columns_.size(); ++i)
        for (const auto& c : columns_[i].cells)
            if (c.row == row && c.pos == pos) return i;
    throw Error("no such cell");
}

std::string MultipleAlignment::serialize() const {
    std::vector<long> number(rows_.size(), -1);
    std::vector<std::size_t> order;
    number[0] = 0;
    order.push_back(0);
    for (const auto& col : columns_)
        for (const auto& c : col.cells)
            if (number[c.row] < 0) {
                number[c.row] = static_cast<long>(order.size());
                order.push_back(c.row);
            }
    std::string out = pad3(rows_.size());
    for (std::size_t r : order) out += "|" + rows_[r].pattern.key();
    out += "||";
    for (const auto& col : columns_) {
        if (!col.matched()) continue;
        std::vector<std::pair<long, std::size_t>> cells;
        for (const auto& c : col.cells) cells.emplace_back(number[c.row], c.pos);
        std::sort(cells.begin(), cells.end());
        out += '[';
        for (const auto& [r, p] : cells) out += std::to_string(r) + '.' + std::to_string(p) + ' ';
        out += ']';
    }
    return out;
}

std::string MultipleAlignment::structure_key() const {
    auto row_id = [&](std::size_t r) {
        return r == 0 ? std::string("N") : "S" + std::to_string(rows_[r].source) + ":" + rows_[r].pattern.key();
    };
    std::vector<std::string> rows;
    for (std::size_t r = 0; r < rows_.size(); ++r) rows.push_back(row_id(r));
    std::sort(rows.begin(), rows.end());
    std::vector<std::string> cols;
    for (const auto& col : columns_) {
        if (!col.matched()) continue;
        std::vector<std::string> cells;
        for (const auto& c : col.cells) cells.push_back(row_id(c.row) + "@" + std::to_string(c.pos));
        std::sort(cells.begin(), cells.end());
        std::string s;
        for (const auto& c : cells) s += c + ";";
        cols.push_back(s);
    }
    std::sort(cols.begin(), cols.end());
    std::string out;
    for (const auto& r : rows) out += r + "\n";
    for (const auto& c : cols) out += "[" + c + "]";
    return out;
}

Pattern project(const MultipleAlignment& alignment) {
    std::vector<std::string> texts;
    texts.reserve(alignment.columns().size());
    for (const auto& col : alignment.columns()) texts.push_back(alignment.symbol(col.cells.front()).text);
    return Pattern::make_new(texts);
}

namespace {

// Dense bitset over column indices.
struct Bits {
    std::vector<std::uint64_t> w;
    explicit Bits(std::size_t n = 0) : w((n + 63) / 64, 0) {}
    bool test(std::size_t i) const { return (w[i >> 6] >> (i & 63)) & 1u; }
    void set(std::size_t i) { w[i >> 6] |= std::uint64_t{1} << (i & 63); }
    Bits& operator|=(const Bits& o) {
        for (std::size_t k = 0; k < w.size(); ++k) w[k] |= o.w[k];
        return *this;
    }
};

// pred[c] = columns that must precede c. Column order is a topological order.
std::vector<Bits> predecessors(const MultipleAlignment& a) {
    const auto& cols = a.columns();
    std::vector<std::vector<std::size_t>> col_of(a.rows().size());
    for (std::size_t r = 0; r < a.rows().size(); ++r) col_of[r].resize(a.rows()[r].pattern.size());
    for (std::size_t i = 0; i < cols.size(); ++i)
        for (const auto& c : cols[i].cells) col_of[c.row][c.pos] = i;
    std::vector<Bits> pred(cols.size(), Bits(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i)
        for (const auto& c : cols[i].cells) {
            if (c.pos == 0) continue;
            const std::size_t p = col_of[c.row][c.pos - 1];
            pred[i] |= pred[p];
            pred[i].set(p);
        }
    return pred;
}

bool self_hit(const MultipleAlignment& a, const Column& col, long source, std::size_t target_pos) {
    if (source < 0) return false;
    for (const auto& c : col.cells)
        if (a.rows()[c.row].source == source && c.pos == target_pos) return true;
    return false;
}

void sort_and_truncate(std::vector<HitSequence>& v, std::size_t limit) {
    std::sort(v.begin(), v.end(), [](const HitSequence& a, const HitSequence& b) { return better(a, b); });
    if (v.size() > limit) v.resize(limit);
}

}  // namespace

std::vector<HitSequence> find_alignment_matches(const MultipleAlignment& base, const Pattern& target, long source,
                                                const SymbolTable& table, const SearchBudget& budget) {
    if (target.empty()) throw Error("find_alignment_matches: empty pattern");
    budget.check();
    const auto& cols = base.columns();
    const std::size_t n = cols.size(), m = target.size();

    std::unordered_map<std::string_view, int> ids;
    std::vector<int> tseq(m, -1);
    std::vector<double> cost;
    for (std::size_t j = 0; j < m; ++j) {
        if (target[j].is_separator()) continue;
        auto [it, fresh] = ids.emplace(target[j].text, static_cast<int>(ids.size()));
        if (fresh) cost.push_back(table.cost(target[j].text));
        tseq[j] = it->second;
    }
    const std::size_t types = ids.size();
    std::vector<std::vector<std::size_t>> by_symbol(types);
    for (std::size_t i = 0; i < n; ++i) {
        const Symbol& s = base.symbol(cols[i].cells.front());
        if (s.is_separator()) continue;
        if (auto it = ids.find(s.text); it != ids.end()) by_symbol[static_cast<std::size_t>(it->second)].push_back(i);
    }
    // tnext[j * types + s] = first target position >= j holding s, m if none.
    std::vector<std::size_t> tnext((m + 1) * types, m);
    for (std::size_t j = m; j-- > 0;) {
        std::copy_n(tnext.begin() + (j + 1) * types, types, tnext.begin() + j * types);
        if (tseq[j] >= 0) tnext[j * types + static_cast<std::size_t>(tseq[j])] = j;
    }
    const auto pred = predecessors(base);

    struct State {
        HitSequence seq;
        Bits forbidden;  // hit columns and everything before them
    };
    // An extension not yet materialised.
    struct Step {
        std::size_t parent;
        Hit hit;
        double score;
    };
    auto grow = [&](const State& s, const Hit& h) {
        State e = s;
        e.seq.hits.push_back(h);
        e.seq.score_bits += cost[static_cast<std::size_t>(tseq[h.target_pos])];
        e.forbidden |= pred[h.driving_pos];
        e.forbidden.set(h.driving_pos);
        return e;
    };
    auto beam = [&](const std::vector<State>& parents, std::vector<Step>& steps) {
        auto order = [&](const Step& a, const Step& b) {
            if (a.score > b.score + kScoreEps) return true;
            if (b.score > a.score + kScoreEps) return false;
            const auto& ha = parents[a.parent].seq.hits;
            const auto& hb = parents[b.parent].seq.hits;
            if (ha != hb) return ha < hb;
            return a.hit < b.hit;
        };
        const std::size_t keep = std::min(steps.size(), budget.beam_width);
        std::partial_sort(steps.begin(), steps.begin() + static_cast<long>(keep), steps.end(), order);
        std::vector<State> out;
        out.reserve(keep);
        for (std::size_t k = 0; k < keep; ++k) out.push_back(grow(parents[steps[k].parent], steps[k].hit));
        return out;
    };

    const std::vector<State> root{State{HitSequence{}, Bits(n)}};
    std::vector<Step> steps;
    for (std::size_t j = 0; j < m; ++j) {
        if (tseq[j] < 0) continue;
        const auto sym = static_cast<std::size_t>(tseq[j]);
        for (std::size_t c : by_symbol[sym])
            if (!self_hit(base, cols[c], source, j)) steps.push_back(Step{0, Hit{c, j}, cost[sym]});
    }
    std::vector<State> live = beam(root, steps);

    std::vector<HitSequence> pool;
    std::vector<std::size_t> admissible;
    while (!live.empty()) {
        for (const auto& s : live) pool.push_back(s.seq);
        sort_and_truncate(pool, budget.max_alternatives);
        steps.clear();
        for (std::size_t i = 0; i < live.size(); ++i) {
            const State& s = live[i];
            const std::size_t from = s.seq.hits.back().target_pos + 1;
            if (budget.exhaustive) {
                for (std::size_t t = from; t < m; ++t) {
                    if (tseq[t] < 0) continue;
                    const auto sym = static_cast<std::size_t>(tseq[t]);
                    for (std::size_t c : by_symbol[sym])
                        if (!s.forbidden.test(c) && !self_hit(base, cols[c], source, t))
                            steps.push_back(Step{i, Hit{c, t}, s.seq.score_bits + cost[sym]});
                }
                continue;
            }
            for (std::size_t sym = 0; sym < types; ++sym) {
                const std::size_t t = tnext[from * types + sym];
                if (t == m) continue;
                admissible.clear();
                for (std::size_t c : by_symbol[sym])
                    if (!s.forbidden.test(c) && !self_hit(base, cols[c], source, t)) admissible.push_back(c);
                for (std::size_t c : admissible) {
                    bool earliest = std::none_of(admissible.begin(), admissible.end(),
                                                 [&](std::size_t o) { return o != c && pred[c].test(o); });
                    if (earliest) steps.push_back(Step{i, Hit{c, t}, s.seq.score_bits + cost[sym]});
                }
            }
        }
        live = beam(live, steps);
    }
    return pool;
}

std::optional<MultipleAlignment> merge(const MultipleAlignment& base, const Pattern& old, long source,
                                       const HitSequence& hits) {
    if (hits.hits.empty() || old.empty() || old.is_new()) return std::nullopt;
    const auto& cols = base.columns();
    std::vector<long> hit_at(cols.size(), -1);
    for (std::size_t i = 0; i < hits.hits.size(); ++i) {
        const Hit& h = hits.hits[i];
        if (h.driving_pos >= cols.size() || h.target_pos >= old.size()) return std::nullopt;
        if (i > 0 && h.target_pos <= hits.hits[i - 1].target_pos) return std::nullopt;
        if (hit_at[h.driving_pos] >= 0) return std::nullopt;
        const Symbol& s = base.symbol(cols[h.driving_pos].cells.front());
        if (s.is_separator() || s.text != old[h.target_pos].text) return std::nullopt;
        // A pattern is never matched against its own copy of the same symbol.
        if (self_hit(base, cols[h.driving_pos], source, h.target_pos)) return std::nullopt;
        hit_at[h.driving_pos] = static_cast<long>(h.target_pos);
    }

    const std::size_t new_row = base.rows().size();
    std::vector<Row> rows = base.rows();
    rows.push_back(Row{old, source});
    std::vector<Column> all(cols);
    // Priority (anchor column, slot, position): slot 0 leads, 1 is the base
    // column itself, 2 follows it.
    std::vector<std::tuple<std::size_t, int, std::size_t>> key;
    for (std::size_t i = 0; i < cols.size(); ++i) {
        key.emplace_back(i, 1, 0);
        if (hit_at[i] >= 0) all[i].cells.push_back(Cell{new_row, static_cast<std::size_t>(hit_at[i])});
    }
    std::vector<std::size_t> new_col(old.size());
    for (std::size_t j = 0, h = 0; j < old.size(); ++j) {
        if (h < hits.hits.size() && hits.hits[h].target_pos == j) {
            new_col[j] = hits.hits[h++].driving_pos;
            continue;
        }
        new_col[j] = all.size();
        all.push_back(Column{{Cell{new_row, j}}});
        if (h == 0)
            key.emplace_back(hits.hits.front().driving_pos, 0, j);
        else
            key.emplace_back(hits.hits[h - 1].driving_pos, 2, j);
    }

    // Kahn's algorithm on within-row successor edges; a leftover means a cycle.
    std::vector<std::vector<std::size_t>> next(all.size());
    std::vector<std::size_t> indegree(all.size(), 0);
    std::vector<std::vector<std::size_t>> col_of(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) col_of[r].resize(rows[r].pattern.size());
    for (std::size_t i = 0; i < all.size(); ++i)
        for (const auto& c : all[i].cells) col_of[c.row][c.pos] = i;
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t p = 0; p + 1 < col_of[r].size(); ++p) {
            next[col_of[r][p]].push_back(col_of[r][p + 1]);
            ++indegree[col_of[r][p + 1]];
        }
    std::set<std::pair<std::tuple<std::size_t, int, std::size_t>, std::size_t>> ready;
    for (std::size_t i = 0; i < all.size(); ++i)
        if (indegree[i] == 0) ready.emplace(key[i], i);
    std::vector<Column> ordered;
    ordered.reserve(all.size());
    while (!ready.empty()) {
        const std::size_t i = ready.begin()->second;
        ready.erase(ready.begin());
        ordered.push_back(std::move(all[i]));
        for (std::size_t d : next[i])
            if (--indegree[d] == 0) ready.emplace(key[d], d);
    }
    if (ordered.size() != all.size()) return std::nullopt;
    return MultipleAlignment::from_parts(std::move(rows), std::move(ordered));
}

Encoding derive_encoding(const MultipleAlignment& alignment, const SymbolTable& table) {
    Encoding enc;
    for (const auto& col : alignment.columns()) {
        bool has_new = false, has_contents = false, has_id = false;
        const Cell* id_cell = nullptr;
        for (const auto& c : col.cells) {
            if (c.row == 0) {
                has_new = true;
                continue;
            }
            Span span = alignment.rows()[c.row].pattern.span_of(c.pos);
            if (span == Span::Contents) has_contents = true;
            if (span == Span::Id && !has_id) {
                has_id = true;
                id_cell = &c;
            }
        }
        if (has_new && !col.matched()) {
            const Symbol& s = alignment.symbol(col.cells.front());
            if (s.is_separator()) continue;
            enc.symbols.push_back(s);
            enc.cost_bits += table.cost(s.text);
        } else if (!has_new && !has_contents && has_id) {
            // An identifier nothing refers to is the code for its row.
            const Symbol& s = alignment.symbol(*id_cell);
            double c = table.cost(s.text);
            enc.symbols.push_back(s);
            enc.cost_bits += c;
            enc.old_cost_bits += c;
        }
    }
    return enc;
}

double matched_new_cost(const MultipleAlignment& alignment, const SymbolTable& table) {
    double bits = 0;
    for (const auto& col : alignment.columns()) {
        if (!col.matched()) continue;
        for (const auto& c : col.cells)
            if (c.row == 0) bits += table.cost(alignment.symbol(c).text);
    }
    return bits;
}

double compression_difference(const MultipleAlignment& alignment, const SymbolTable& table) {
    return matched_new_cost(alignment, table) - derive_encoding(alignment, table).old_cost_bits;
}

std::vector<double> alignment_probabilities(const std::vector<MultipleAlignment>& alignments) {
    if (alignments.empty()) throw Error("alignment_probabilities: empty list");
    double top = -std::numeric_limits<double>::infinity();
    for (const auto& a : alignments) {
        if (!std::isfinite(a.score())) throw Error("alignment_probabilities: non-finite score");
        top = std::max(top, a.score());
    }
    std::vector<double> p;
    double sum = 0;
    for (const auto& a : alignments) {
        p.push_back(std::exp2(a.score() - top));
        sum += p.back();
    }
    for (auto& v : p) v /= sum;
    return p;
}

double unified_bits(const MultipleAlignment& alignment, const SymbolTable& table) {
    double bits = 0;
    for (const auto& col : alignment.columns())
        if (col.matched()) bits += static_cast<double>(col.cells.size() - 1) * table.cost(alignment.symbol(col.cells.front()).text);
    return bits;
}

bool better(const MultipleAlignment& a, const MultipleAlignment& b) {
    if (a.score() > b.score() + kScoreEps) return true;
    if (b.score() > a.score() + kScoreEps) return false;
    if (a.unified_bits() > b.unified_bits() + kScoreEps) return true;
    if (b.unified_bits() > a.unified_bits() + kScoreEps) return false;
    return a.serialize() < b.serialize();
}

}  // namespace sp
