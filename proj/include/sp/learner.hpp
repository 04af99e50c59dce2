#pragma once

// Unsupervised grammar induction under a minimum-description-length score.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "sp/alignment.hpp"
#include "sp/core.hpp"
#include "sp/engine.hpp"
#include "sp/runtime.hpp"

namespace sp {

struct Corpus {
    std::vector<Pattern> patterns;
    // Σ raw cost of the patterns under the corpus's own frequency table.
    double raw_cost_bits = 0;

    // Throws on an empty list or a non-New pattern.
    static Corpus make(std::vector<Pattern> patterns);
};

struct GrammarScore {
    double g_bits = 0;
    double e_bits = 0;
    double total = 0;
};

struct LearnParams {
    std::size_t grammar_beam = 4;
    std::size_t passes = 2;
    // Lighter than the engine defaults: every successor grammar is scored
    // against the whole corpus.
    EngineParams engine{SearchBudget{50, 5}, 10, 16, 5, 2};
    std::size_t encoding_passes = 0;
    // Alignments per corpus pattern that feed candidate derivation.
    std::size_t candidate_alignments = 2;
    std::size_t workers = 1;
    MatchIndex* index = nullptr;

    void check() const;
};

// Counts corpus symbols as they occur, each grammar pattern's symbols once,
// and each ID span again per use (the pattern's frequency). An empty grammar
// therefore scores the raw corpus cost.
SymbolTable scoring_table(const Grammar& grammar, const Corpus& corpus);

// Cost of the end-of-pattern delimiter charged once per grammar pattern.
inline constexpr double kDelimiterBits = 1.0;

// g_bits = Σ raw pattern cost + kDelimiterBits per pattern; e_bits = Σ over
// the corpus of the encoding cost of each pattern's best alignment.
GrammarScore grammar_score(const Grammar& grammar, const Corpus& corpus, const EngineParams& engine,
                           std::size_t workers = 1, MatchIndex* index = nullptr);

// Fresh `%n` / `#%n` identifiers; never reused within one source.
class IdSource {
public:
    explicit IdSource(std::uint64_t next = 1) : next_(next) {}
    std::string fresh() { return "%" + std::to_string(next_++); }
    std::uint64_t peek() const noexcept { return next_; }
    // First counter value above every `%n` symbol in the grammar.
    static IdSource after(const Grammar& grammar);

private:
    std::uint64_t next_;
};

struct CandidateGroup {
    enum class Kind { Incorporation, Split, SplitPlain };
    Kind kind = Kind::Incorporation;
    // Added in order: segment patterns before the abstracts that use them.
    std::vector<Pattern> patterns;
    // Grammar index of the row rewritten as `replacement`, -1 when none.
    long replaces = -1;
    std::vector<Pattern> replacement;
};

// Candidates from an alignment whose row 0 is one corpus pattern:
// (a) the pattern itself under a fresh ID; (b) when some Old row shares
// symbols with it, the split of both into matched runs and unmatched
// segments plus abstract patterns referencing them, with and without
// abstracts. Only the Old row with most New hits is split.
std::vector<CandidateGroup> derive_candidates(const MultipleAlignment& alignment, const Grammar& grammar,
                                              IdSource& ids);

// All patterns of all groups, in order.
std::vector<Pattern> flatten(const std::vector<CandidateGroup>& groups);

struct LearnedGrammar {
    Grammar grammar;
    GrammarScore score;
    // One line per pattern: how it was first created.
    std::vector<std::string> provenance;
};

// Best first: total asc, then serialized grammar asc.
std::vector<LearnedGrammar> learn(const Corpus& corpus, const LearnParams& params);

// Re-learns from the encodings of the corpus under `grammar` and returns
// the union, repeated encoding_passes times. New IDs continue after the
// grammar's own.
LearnedGrammar learn_from_encodings(const LearnedGrammar& grammar, const Corpus& corpus, const LearnParams& params);

// Encoding symbols of each corpus pattern's best alignment.
std::vector<Pattern> encode_corpus(const Grammar& grammar, const Corpus& corpus, const EngineParams& engine);

struct GeneralizationReport {
    std::vector<double> held_out_bits;  // per held-out pattern
    double held_out_mean = 0;
    double control_mean = 0;  // over the permuted controls
    std::size_t controls = 0;
};

// Controls are `permutations` seeded shuffles of each held-out pattern.
GeneralizationReport generalization_report(const Grammar& grammar, const Corpus& training, const Corpus& held_out,
                                           const EngineParams& engine, std::size_t permutations = 20,
                                           std::uint64_t seed = 1);

}  // namespace sp
