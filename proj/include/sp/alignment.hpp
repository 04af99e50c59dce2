#pragma once

// SP-multiple-alignments: rows of patterns (New in row 0) and an ordered list
// of columns. Every symbol position of every row sits in exactly one column;
// singleton columns hold unmatched symbols, so the column order is also the
// order of the projection.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "sp/core.hpp"
#include "sp/matcher.hpp"

namespace sp {

struct Cell {
    std::size_t row;
    std::size_t pos;
    friend bool operator==(const Cell&, const Cell&) = default;
    friend auto operator<=>(const Cell&, const Cell&) = default;
};

struct Column {
    std::vector<Cell> cells;  // sorted by row
    bool matched() const noexcept { return cells.size() >= 2; }
    bool has_row(std::size_t row) const noexcept;
};

struct Row {
    Pattern pattern;
    // Index of the pattern in the grammar it came from; -1 for row 0.
    long source = -1;
};

class MultipleAlignment {
public:
    MultipleAlignment() = default;

    // Row 0 only. Several New patterns are joined with kNewSeparator.
    static MultipleAlignment bare(const std::vector<Pattern>& new_patterns);
    // Validates every invariant, throws Error on violation. Column order is kept.
    static MultipleAlignment from_parts(std::vector<Row> rows, std::vector<Column> columns);

    const std::vector<Row>& rows() const noexcept { return rows_; }
    const std::vector<Column>& columns() const noexcept { return columns_; }
    std::vector<const Column*> matched_columns() const;
    std::size_t column_of(std::size_t row, std::size_t pos) const;
    const Symbol& symbol(const Cell& c) const { return rows_[c.row].pattern[c.pos]; }
    const Pattern& new_row() const { return rows_.front().pattern; }

    double score() const noexcept { return score_; }
    void set_score(double s) noexcept { score_ = s; }
    // Tie-break between equal scores; set alongside the score.
    double unified_bits() const noexcept { return unified_bits_; }
    void set_unified_bits(double b) noexcept { unified_bits_ = b; }

    // Canonical text: rows numbered by first participation, columns left to
    // right. Depends on the column order.
    std::string serialize() const;
    // Order-independent identity of the row set and matched columns.
    std::string structure_key() const;

private:
    void check() const;

    std::vector<Row> rows_;
    std::vector<Column> columns_;
    double score_ = 0;
    double unified_bits_ = 0;
};

Pattern project(const MultipleAlignment& alignment);

// Matches `target` against the partial order of base's columns: column a
// precedes b when some row has a before b. Hits are (column index, target
// position), increasing in target position, and never place a later hit
// before an earlier one in that order. Seeded at every hit; each extension
// takes, per symbol text, the next target occurrence and every earliest
// admissible column. Hits pairing a column with the same position of a row
// from `source` are excluded.
std::vector<HitSequence> find_alignment_matches(const MultipleAlignment& base, const Pattern& target, long source,
                                                const SymbolTable& table, const SearchBudget& budget);

// Appends `old` as a new row, adding its hits to base's columns. The result
// keeps base's column order where it can; unmatched symbols of the new row
// follow their preceding hit (or lead the first one). Returns nothing when
// the merged columns would cross, when hits are malformed, or when a hit
// pairs a symbol with the same position of another row from `source`.
std::optional<MultipleAlignment> merge(const MultipleAlignment& base, const Pattern& old, long source,
                                       const HitSequence& hits);

struct Encoding {
    std::vector<Symbol> symbols;
    double cost_bits = 0;
    // Cost of the symbols contributed by Old rows only.
    double old_cost_bits = 0;
};

Encoding derive_encoding(const MultipleAlignment& alignment, const SymbolTable& table);
double matched_new_cost(const MultipleAlignment& alignment, const SymbolTable& table);
double compression_difference(const MultipleAlignment& alignment, const SymbolTable& table);

// 2^score normalised over the list.
std::vector<double> alignment_probabilities(const std::vector<MultipleAlignment>& alignments);

// Σ (column size − 1) × cost over matched columns.
double unified_bits(const MultipleAlignment& alignment, const SymbolTable& table);

// Best first: score desc, then unified_bits desc, then serialization asc.
bool better(const MultipleAlignment& a, const MultipleAlignment& b);

}  // namespace sp
