#pragma once

// Discrete-time firing-rate model of pattern assemblies with inhibitory
// wiring. Recognition is disinhibition of an assembly's ID symbol.

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sp/core.hpp"

namespace sp {

enum class NeuralKind { C, Id };

struct NeuralSymbol {
    std::string text;
    NeuralKind kind = NeuralKind::C;
    double rate = 0;
    std::vector<std::size_t> inhibitory_out;  // symbol indices
    long owner = -1;                          // assembly index
};

struct PatternAssembly {
    std::size_t id_symbol = 0;
    std::vector<std::size_t> contents;
    std::uint64_t frequency = 1;
    // Remaining ID-span and close symbols; never inhibited.
    std::vector<std::string> boundary;
    std::size_t pattern = 0;  // grammar index
};

struct NeuralParams {
    double baseline_rate = 20;
    double inhibition_gain = 10;
    std::size_t settle_tau = 4;
    // A full in-order match drives the ID to baseline + gain; one missing
    // symbol out of n drops it by 2 × gain / n.
    double recognition_threshold = 1.49;

    void check() const;
};

class Network {
public:
    // One assembly per Old pattern; every pattern needs an ID symbol. Contents
    // symbols that are some pattern's close symbol are boundary, not content.
    static Network compile(const Grammar& grammar, const NeuralParams& params = {});

    const std::vector<NeuralSymbol>& symbols() const noexcept { return symbols_; }
    const std::vector<PatternAssembly>& assemblies() const noexcept { return assemblies_; }
    std::size_t time() const noexcept { return time_; }
    // Fibres from ID symbols to same-text contents symbols of other assemblies.
    std::size_t id_fibres() const noexcept { return id_fibres_; }

    // Holds the input until clear_input(). Unknown symbols reach nothing.
    void present(const Pattern& input);
    void clear_input() { input_.clear(); }
    bool has_input() const noexcept { return !input_.empty(); }

    // Contents positions of assembly `a` reached by the current input, given
    // the set of ID symbols elevated at the previous step.
    std::vector<std::size_t> deliveries(std::size_t a) const;

    void step(const NeuralParams& params);

private:
    struct Event {
        std::string text;
        std::size_t position;
        long from = -1;  // assembly whose ID raised it, -1 for input
    };
    std::vector<Event> events_for(std::size_t a) const;
    // (event position, contents index) pairs of the delivered subsequence.
    std::vector<std::pair<std::size_t, std::size_t>> deliver(std::size_t a) const;

    std::vector<NeuralSymbol> symbols_;
    std::vector<PatternAssembly> assemblies_;
    std::vector<std::string> input_;
    std::vector<bool> elevated_;
    std::vector<std::size_t> anchor_;
    std::size_t time_ = 0;
    std::size_t id_fibres_ = 0;
};

struct Recognition {
    std::size_t assembly;
    std::string id;
    double peak_rate;
    std::size_t peak_step;  // 1-based
};

// Presents the input for `steps` steps. Assemblies whose ID rate peaked
// above recognition_threshold × baseline, by peak desc, then earlier peak,
// then assembly index.
std::vector<Recognition> recognize(Network& network, const Pattern& input, std::size_t steps,
                                   const NeuralParams& params = {});

struct TraceRow {
    std::size_t step;
    std::string text;
    long assembly;
    double rate;
};

// Rates of every symbol after each step; `input_steps` with the input held,
// then `settle_steps` without it. Row 0 is the initial state.
std::vector<TraceRow> trace(Network& network, const Pattern& input, std::size_t input_steps, std::size_t settle_steps,
                            const NeuralParams& params = {});

// Tab-separated `step text assembly rate`, one header line.
std::string format_trace(const std::vector<TraceRow>& rows);

}  // namespace sp
