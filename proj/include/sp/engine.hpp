#pragma once

// Staged construction of SP-multiple-alignments with per-stage beam pruning.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sp/alignment.hpp"
#include "sp/core.hpp"
#include "sp/matcher.hpp"
#include "sp/runtime.hpp"

namespace sp {

struct EngineParams {
    SearchBudget match_budget{200, 20};
    std::size_t alignment_beam = 50;
    std::size_t max_stages = 16;
    std::size_t top_k = 5;
    // Stages in a row without a new best score before the search stops.
    std::size_t patience = 2;

    void check() const;
};

struct AuditCandidate {
    std::string serialization;
    double score;
    bool survived;
};

struct StageAudit {
    std::size_t stage;
    std::vector<AuditCandidate> candidates;  // sorted by serialization
    std::uint64_t index_hits = 0;
    std::uint64_t index_misses = 0;
    std::size_t workers = 1;
};

struct RunOptions {
    std::size_t workers = 1;
    MatchIndex* index = nullptr;
    std::function<void(const StageAudit&)> audit;
};

// Scores with the grammar's own symbol table.
std::vector<MultipleAlignment> build_alignments(const std::vector<Pattern>& new_patterns, const Grammar& grammar,
                                                const EngineParams& params, const RunOptions& options = {});

std::vector<MultipleAlignment> build_alignments(const std::vector<Pattern>& new_patterns, const Grammar& grammar,
                                                const SymbolTable& table, const EngineParams& params,
                                                const RunOptions& options = {});

}  // namespace sp
