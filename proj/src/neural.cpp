#include "sp/neural.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

namespace sp {

void NeuralParams::check() const {
    if (!(baseline_rate > 0)) throw Error("baseline_rate must be > 0");
    if (!(inhibition_gain > 0)) throw Error("inhibition_gain must be > 0");
    if (settle_tau < 1) throw Error("settle_tau must be >= 1");
    if (!(recognition_threshold >= 1)) throw Error("recognition_threshold must be >= 1");
}

Network Network::compile(const Grammar& grammar, const NeuralParams& params) {
    params.check();
    std::set<std::string> closers;
    for (const auto& p : grammar.patterns())
        for (const auto& t : p.texts(Span::Close)) closers.insert(t);

    Network net;
    for (std::size_t i = 0; i < grammar.size(); ++i) {
        const Pattern& p = grammar[i];
        if (p.id_size() == 0) {
            const std::size_t line = grammar.source_line(i);
            throw Error("pattern " + std::to_string(i + 1) + (line ? " at line " + std::to_string(line) : "") +
                        " has no ID symbol");
        }
        PatternAssembly a;
        a.pattern = i;
        a.frequency = p.frequency();
        const long owner = static_cast<long>(net.assemblies_.size());
        a.id_symbol = net.symbols_.size();
        net.symbols_.push_back(NeuralSymbol{p[0].text, NeuralKind::Id, params.baseline_rate, {}, owner});
        for (std::size_t k = 1; k < p.size(); ++k) {
            const Span span = p.span_of(k);
            if (span != Span::Contents || closers.count(p[k].text)) {
                a.boundary.push_back(p[k].text);
                continue;
            }
            a.contents.push_back(net.symbols_.size());
            // A contents symbol inhibits only its own ID symbol.
            net.symbols_.push_back(NeuralSymbol{p[k].text, NeuralKind::C, params.baseline_rate, {a.id_symbol}, owner});
        }
        net.assemblies_.push_back(std::move(a));
    }
    for (std::size_t a = 0; a < net.assemblies_.size(); ++a) {
        NeuralSymbol& id = net.symbols_[net.assemblies_[a].id_symbol];
        for (std::size_t b = 0; b < net.assemblies_.size(); ++b) {
            if (b == a) continue;
            for (std::size_t c : net.assemblies_[b].contents) {
                if (net.symbols_[c].text != id.text) continue;
                id.inhibitory_out.push_back(c);
                ++net.id_fibres_;
            }
        }
    }
    net.elevated_.assign(net.assemblies_.size(), false);
    net.anchor_.assign(net.assemblies_.size(), 0);
    return net;
}

void Network::present(const Pattern& input) {
    input_.clear();
    for (const auto& s : input.symbols()) input_.push_back(s.text);
}

std::vector<Network::Event> Network::events_for(std::size_t a) const {
    std::vector<Event> events;
    if (input_.empty()) return events;
    for (std::size_t i = 0; i < input_.size(); ++i) events.push_back(Event{input_[i], i, -1});
    // Elevated IDs reach higher assemblies through their fibres.
    for (std::size_t b = 0; b < assemblies_.size(); ++b) {
        if (b == a || !elevated_[b]) continue;
        const auto& out = symbols_[assemblies_[b].id_symbol].inhibitory_out;
        const bool wired = std::any_of(out.begin(), out.end(), [&](std::size_t c) {
            return symbols_[c].owner == static_cast<long>(a);
        });
        if (wired) events.push_back(Event{symbols_[assemblies_[b].id_symbol].text, anchor_[b], static_cast<long>(b)});
    }
    std::stable_sort(events.begin(), events.end(), [](const Event& x, const Event& y) {
        return x.position != y.position ? x.position < y.position : x.from < y.from;
    });
    return events;
}

std::vector<std::pair<std::size_t, std::size_t>> Network::deliver(std::size_t a) const {
    // Topographic gating: only an in-order subsequence of the events reaches
    // the contents; the longest one, earliest positions first.
    const std::vector<Event> ev = events_for(a);
    const auto& contents = assemblies_[a].contents;
    const std::size_t n = ev.size(), m = contents.size();
    std::vector<std::vector<std::size_t>> suffix(n + 1, std::vector<std::size_t>(m + 1, 0));
    for (std::size_t i = n; i-- > 0;)
        for (std::size_t j = m; j-- > 0;)
            suffix[i][j] = ev[i].text == symbols_[contents[j]].text
                               ? 1 + suffix[i + 1][j + 1]
                               : std::max(suffix[i + 1][j], suffix[i][j + 1]);
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0, j = 0; i < n && j < m;) {
        if (ev[i].text == symbols_[contents[j]].text && suffix[i][j] == 1 + suffix[i + 1][j + 1]) {
            out.emplace_back(ev[i].position, j);
            ++i;
            ++j;
        } else if (suffix[i + 1][j] >= suffix[i][j + 1]) {
            ++i;
        } else {
            ++j;
        }
    }
    return out;
}

std::vector<std::size_t> Network::deliveries(std::size_t a) const {
    std::vector<std::size_t> out;
    for (const auto& [pos, j] : deliver(a)) out.push_back(j);
    return out;
}

void Network::step(const NeuralParams& params) {
    params.check();
    const double base = params.baseline_rate;
    const double keep = 1.0 - 1.0 / static_cast<double>(params.settle_tau);
    auto relax = [&](double r) { return base + (r - base) * keep; };

    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> delivered(assemblies_.size());
    for (std::size_t a = 0; a < assemblies_.size(); ++a) delivered[a] = deliver(a);
    for (std::size_t a = 0; a < assemblies_.size(); ++a) {
        const PatternAssembly& as = assemblies_[a];
        std::vector<bool> hit(as.contents.size(), false);
        for (const auto& d : delivered[a]) hit[d.second] = true;
        for (std::size_t j = 0; j < as.contents.size(); ++j) {
            double& r = symbols_[as.contents[j]].rate;
            r = hit[j] ? std::max(0.0, r - params.inhibition_gain) : relax(r);
        }
        double& id = symbols_[as.id_symbol].rate;
        if (input_.empty() || as.contents.empty()) {
            id = relax(id);
        } else {
            const double n = static_cast<double>(as.contents.size());
            const double inhibited = static_cast<double>(delivered[a].size());
            id = std::max(0.0, base + params.inhibition_gain * (inhibited - (n - inhibited)) / n);
        }
    }
    for (std::size_t a = 0; a < assemblies_.size(); ++a) {
        elevated_[a] = symbols_[assemblies_[a].id_symbol].rate > params.recognition_threshold * base;
        anchor_[a] = delivered[a].empty() ? 0 : delivered[a].front().first;
    }
    ++time_;
}

std::vector<Recognition> recognize(Network& network, const Pattern& input, std::size_t steps,
                                   const NeuralParams& params) {
    params.check();
    const auto& as = network.assemblies();
    std::vector<double> peak(as.size(), 0);
    std::vector<std::size_t> when(as.size(), 0);
    network.present(input);
    for (std::size_t s = 1; s <= steps; ++s) {
        network.step(params);
        for (std::size_t a = 0; a < as.size(); ++a) {
            const double r = network.symbols()[as[a].id_symbol].rate;
            if (r > peak[a]) {
                peak[a] = r;
                when[a] = s;
            }
        }
    }
    network.clear_input();
    std::vector<Recognition> out;
    for (std::size_t a = 0; a < as.size(); ++a)
        if (peak[a] > params.recognition_threshold * params.baseline_rate)
            out.push_back(Recognition{a, network.symbols()[as[a].id_symbol].text, peak[a], when[a]});
    std::sort(out.begin(), out.end(), [](const Recognition& x, const Recognition& y) {
        if (x.peak_rate != y.peak_rate) return x.peak_rate > y.peak_rate;
        if (x.peak_step != y.peak_step) return x.peak_step < y.peak_step;
        return x.assembly < y.assembly;
    });
    return out;
}

std::vector<TraceRow> trace(Network& network, const Pattern& input, std::size_t input_steps, std::size_t settle_steps,
                            const NeuralParams& params) {
    std::vector<TraceRow> rows;
    auto snapshot = [&] {
        for (const auto& s : network.symbols()) rows.push_back(TraceRow{network.time(), s.text, s.owner, s.rate});
    };
    snapshot();
    network.present(input);
    for (std::size_t s = 0; s < input_steps; ++s) {
        network.step(params);
        snapshot();
    }
    network.clear_input();
    for (std::size_t s = 0; s < settle_steps; ++s) {
        network.step(params);
        snapshot();
    }
    return rows;
}

std::string format_trace(const std::vector<TraceRow>& rows) {
    std::string out = "step\tsymbol\tassembly\trate\n";
    char buf[64];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "\t%ld\t%.6f\n", r.assembly, r.rate);
        out += std::to_string(r.step) + "\t" + r.text + buf;
    }
    return out;
}

}  // namespace sp
