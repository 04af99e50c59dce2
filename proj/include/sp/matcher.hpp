#pragma once

// Multi-alternative order-preserving matching between two patterns.

#include <cstddef>
#include <string>
#include <vector>

#include "sp/core.hpp"

namespace sp {

struct Hit {
    std::size_t driving_pos;
    std::size_t target_pos;
    friend bool operator==(const Hit&, const Hit&) = default;
    friend auto operator<=>(const Hit&, const Hit&) = default;
};

struct HitSequence {
    std::vector<Hit> hits;
    double score_bits = 0;

    std::string serialize() const;
    friend bool operator==(const HitSequence& a, const HitSequence& b) { return a.hits == b.hits; }
};

struct SearchBudget {
    std::size_t beam_width = 200;
    std::size_t max_alternatives = 20;
    // Extend with every later hit instead of only the dominant ones; with
    // unbounded beams the search then visits every hit sequence.
    bool exhaustive = false;

    void check() const;
};

// Best first: score desc, then serialization asc.
bool better(const HitSequence& a, const HitSequence& b);

// Budgeted best-first search. A sequence is seeded at every hit and extended
// one hit at a time with, for each symbol text, the nearest occurrence after
// the last hit in both patterns; every expanded sequence is an alternative.
// The frontier is expanded by highest score plus remaining bound, where the
// bound is Σ over symbols of min(occurrences left in each pattern) × cost,
// for at most beam_width × (|driving| + |target|) expansions. The search
// stops early once no frontier sequence can enter the best max_alternatives.
std::vector<HitSequence> find_matches(const Pattern& driving, const Pattern& target, const SymbolTable& table,
                                      const SearchBudget& budget);

// Exact maximum-score matching by dynamic programming; |d| * |t| <= 10000.
HitSequence brute_force_best_match(const Pattern& driving, const Pattern& target, const SymbolTable& table);

bool valid_hit_sequence(const HitSequence& seq, const Pattern& driving, const Pattern& target);

}  // namespace sp
