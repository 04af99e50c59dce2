#include "sp/learner.hpp"

#include "sp/io.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <numeric>
#include <random>
#include <set>

namespace sp {

namespace {

constexpr double kScoreEps = 1e-9;

std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) {
        if (!out.empty()) out += ' ';
        out += s;
    }
    return out;
}

// Distinct corpus patterns with their multiplicities, in first-seen order.
struct Distinct {
    std::vector<Pattern> patterns;
    std::vector<std::size_t> counts;
    std::vector<std::size_t> first_index;
};

Distinct distinct_patterns(const Corpus& corpus) {
    Distinct d;
    std::map<std::string, std::size_t> at;
    for (std::size_t i = 0; i < corpus.patterns.size(); ++i) {
        const Pattern& p = corpus.patterns[i];
        auto [it, fresh] = at.emplace(join(p.texts()), d.patterns.size());
        if (fresh) {
            d.patterns.push_back(p);
            d.counts.push_back(p.frequency());
            d.first_index.push_back(i);
        } else {
            d.counts[it->second] += p.frequency();
        }
    }
    return d;
}

// Bits the pattern could have taken as a `%n` counter value, 0 otherwise.
std::uint64_t counter_of(std::string_view text) {
    if (!text.empty() && text.front() == '#') text.remove_prefix(1);
    if (text.size() < 2 || text.front() != '%') return 0;
    std::uint64_t v = 0;
    for (char c : text.substr(1)) {
        if (!std::isdigit(static_cast<unsigned char>(c))) return 0;
        v = v * 10 + static_cast<std::uint64_t>(c - '0');
        if (v > (std::uint64_t{1} << 60)) return 0;
    }
    return v;
}

std::uint64_t next_counter(const std::vector<Pattern>& patterns, std::uint64_t floor) {
    std::uint64_t top = floor;
    for (const auto& p : patterns)
        for (const auto& s : p.symbols()) top = std::max(top, counter_of(s.text) + 1);
    return top;
}

struct Evaluation {
    GrammarScore score;
    std::vector<std::size_t> usage;  // corpus patterns whose best alignment uses each grammar pattern
    std::vector<Pattern> encodings;  // per distinct corpus pattern
};

Evaluation evaluate(const Grammar& grammar, const Corpus& corpus, const Distinct& distinct, const EngineParams& engine,
                    std::size_t workers, MatchIndex* index) {
    const SymbolTable table = scoring_table(grammar, corpus);
    Evaluation ev;
    ev.usage.assign(grammar.size(), 0);
    for (const auto& p : grammar.patterns()) ev.score.g_bits += pattern_raw_cost(p, table) + kDelimiterBits;

    std::vector<MultipleAlignment> best(distinct.patterns.size());
    run_tasks(distinct.patterns.size(), workers, [&](std::size_t i) {
        RunOptions opts;
        opts.index = index;
        best[i] = build_alignments({distinct.patterns[i]}, grammar, table, engine, opts).front();
    });
    // Serial reduce in corpus order.
    for (std::size_t i = 0; i < best.size(); ++i) {
        const Encoding enc = derive_encoding(best[i], table);
        ev.score.e_bits += static_cast<double>(distinct.counts[i]) * enc.cost_bits;
        std::vector<std::string> texts;
        for (const auto& s : enc.symbols) texts.push_back(s.text);
        ev.encodings.push_back(texts.empty() ? Pattern() : Pattern::make_new(texts));
        std::set<long> used;
        for (const auto& r : best[i].rows())
            if (r.source >= 0) used.insert(r.source);
        for (long s : used) ev.usage[static_cast<std::size_t>(s)] += distinct.counts[i];
    }
    ev.score.total = ev.score.g_bits + ev.score.e_bits;
    return ev;
}

}  // namespace

Corpus Corpus::make(std::vector<Pattern> patterns) {
    if (patterns.empty()) throw Error("corpus must not be empty");
    for (const auto& p : patterns)
        if (!p.is_new()) throw Error("corpus patterns must be New");
    Corpus c;
    c.patterns = std::move(patterns);
    const SymbolTable table = build_symbol_table({&c.patterns});
    for (const auto& p : c.patterns) c.raw_cost_bits += static_cast<double>(p.frequency()) * pattern_raw_cost(p, table);
    return c;
}

void LearnParams::check() const {
    if (grammar_beam < 1 || passes < 1 || candidate_alignments < 1 || workers < 1)
        throw Error("learn parameters must be >= 1");
    engine.check();
}

SymbolTable scoring_table(const Grammar& grammar, const Corpus& corpus) {
    std::vector<Pattern> once = grammar.patterns();
    std::vector<Pattern> codes;
    for (auto& p : once) {
        if (p.id_size() > 0) codes.push_back(Pattern::make_plain(p.texts(Span::Id), p.frequency()));
        p.set_frequency(1);
    }
    return build_symbol_table({&once, &codes, &corpus.patterns});
}

GrammarScore grammar_score(const Grammar& grammar, const Corpus& corpus, const EngineParams& engine,
                           std::size_t workers, MatchIndex* index) {
    return evaluate(grammar, corpus, distinct_patterns(corpus), engine, workers, index).score;
}

IdSource IdSource::after(const Grammar& grammar) { return IdSource(next_counter(grammar.patterns(), 1)); }

std::vector<Pattern> encode_corpus(const Grammar& grammar, const Corpus& corpus, const EngineParams& engine) {
    const Distinct d = distinct_patterns(corpus);
    const Evaluation ev = evaluate(grammar, corpus, d, engine, 1, nullptr);
    std::map<std::string, std::size_t> at;
    for (std::size_t i = 0; i < d.patterns.size(); ++i) at.emplace(join(d.patterns[i].texts()), i);
    std::vector<Pattern> out;
    for (const auto& p : corpus.patterns) out.push_back(ev.encodings[at.at(join(p.texts()))]);
    return out;
}

namespace {

using Texts = std::vector<std::string>;

Pattern wrapped(const std::string& id, const Texts& contents) { return Pattern::make_old({id}, contents, {"#" + id}); }

void append(Texts& to, const Texts& from) { to.insert(to.end(), from.begin(), from.end()); }

// A reference to a pattern: its first ID symbol and its close span.
Texts reference_to(const Pattern& p) {
    Texts out;
    if (p.id_size() > 0) out.push_back(p[0].text);
    append(out, p.texts(Span::Close));
    return out;
}

struct Segment {
    bool matched;
    Texts x;  // New side
    Texts r;  // Old row contents side
};

}  // namespace

std::vector<CandidateGroup> derive_candidates(const MultipleAlignment& alignment, const Grammar& grammar,
                                              IdSource& ids) {
    std::vector<CandidateGroup> out;
    const Pattern& x = alignment.new_row();
    Texts xs;
    for (const auto& s : x.symbols())
        if (!s.is_separator()) xs.push_back(s.text);
    {
        CandidateGroup inc;
        inc.kind = CandidateGroup::Kind::Incorporation;
        inc.patterns.push_back(wrapped(ids.fresh(), xs));
        out.push_back(std::move(inc));
    }

    // The Old row sharing most contents symbols with the New row.
    const auto& rows = alignment.rows();
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> pairs(rows.size());
    for (const auto& col : alignment.columns()) {
        const Cell* n = nullptr;
        for (const auto& c : col.cells)
            if (c.row == 0) n = &c;
        if (!n) continue;
        for (const auto& c : col.cells)
            if (c.row != 0 && rows[c.row].pattern.span_of(c.pos) == Span::Contents)
                pairs[c.row].emplace_back(n->pos, c.pos);
    }
    std::size_t r = 0;
    for (std::size_t k = 1; k < rows.size(); ++k)
        if (pairs[k].size() > pairs[r].size()) r = k;
    if (r == 0 || pairs[r].empty() || xs.size() != x.size()) return out;
    const Pattern& R = rows[r].pattern;
    auto& hits = pairs[r];
    std::sort(hits.begin(), hits.end());

    // Alternate gaps and maximal matched runs, gap first and last.
    std::vector<Segment> segs;
    std::size_t xi = 0, ri = R.contents_begin();
    for (std::size_t k = 0; k < hits.size();) {
        Segment gap{false, {}, {}};
        for (; xi < hits[k].first; ++xi) gap.x.push_back(x[xi].text);
        for (; ri < hits[k].second; ++ri) gap.r.push_back(R[ri].text);
        segs.push_back(std::move(gap));
        Segment run{true, {}, {}};
        do {
            run.x.push_back(x[xi].text);
            ++xi;
            ++ri;
            ++k;
        } while (k < hits.size() && hits[k].first == xi && hits[k].second == ri);
        run.r = run.x;
        segs.push_back(std::move(run));
    }
    {
        Segment gap{false, {}, {}};
        for (; xi < x.size(); ++xi) gap.x.push_back(x[xi].text);
        for (; ri < R.contents_end(); ++ri) gap.r.push_back(R[ri].text);
        segs.push_back(std::move(gap));
    }
    const bool r_named = R.id_size() > 0 && rows[r].source >= 0 &&
                         static_cast<std::size_t>(rows[r].source) < grammar.size() &&
                         grammar[static_cast<std::size_t>(rows[r].source)] == R;
    const std::size_t runs = static_cast<std::size_t>(std::count_if(segs.begin(), segs.end(), [](const Segment& s) { return s.matched; }));
    const bool no_gaps = std::all_of(segs.begin(), segs.end(), [](const Segment& s) { return s.x.empty() && s.r.empty(); });
    const Texts r_contents = R.texts(Span::Contents);

    const bool two_sided = std::any_of(segs.begin(), segs.end(), [](const Segment& s) { return !s.x.empty() && !s.r.empty(); });
    for (const bool classes : {true, false}) {
        if (!classes && !two_sided) break;
        CandidateGroup g;
        g.kind = classes ? CandidateGroup::Kind::Split : CandidateGroup::Kind::SplitPlain;
        Texts x_abs, r_abs;
        for (const auto& s : segs) {
            if (s.matched) {
                if (s.x.size() == 1) {
                    x_abs.push_back(s.x[0]);
                    r_abs.push_back(s.x[0]);
                } else if (r_named && s.r == r_contents) {
                    // The run is the whole of R: refer to R itself.
                    append(x_abs, reference_to(R));
                    append(r_abs, reference_to(R));
                } else {
                    Pattern p = wrapped(ids.fresh(), s.x);
                    append(x_abs, reference_to(p));
                    append(r_abs, reference_to(p));
                    g.patterns.push_back(std::move(p));
                }
                continue;
            }
            if (classes && !s.x.empty() && !s.r.empty()) {
                // Alternatives in one slot share a class ID.
                const std::string cls = ids.fresh();
                g.patterns.push_back(Pattern::make_old({cls, ids.fresh()}, s.x, {"#" + cls}));
                g.patterns.push_back(Pattern::make_old({cls, ids.fresh()}, s.r, {"#" + cls}));
                x_abs.insert(x_abs.end(), {cls, "#" + cls});
                r_abs.insert(r_abs.end(), {cls, "#" + cls});
                continue;
            }
            for (const Texts* side : {&s.x, &s.r}) {
                if (side->empty()) continue;
                Texts& abs = side == &s.x ? x_abs : r_abs;
                if (side->size() == 1) {
                    abs.push_back(side->front());
                } else {
                    Pattern p = wrapped(ids.fresh(), *side);
                    append(abs, reference_to(p));
                    g.patterns.push_back(std::move(p));
                }
            }
        }
        if (no_gaps && runs == 1) {
            // Identical contents: the run pattern alone.
            if (!classes) break;
            if (!g.patterns.empty()) out.push_back(std::move(g));
            break;
        }
        if (x_abs == r_abs && r_named) {
            g.replaces = rows[r].source;
            g.replacement.push_back(Pattern::make_old(R.texts(Span::Id), r_abs, R.texts(Span::Close)));
        } else {
            g.patterns.push_back(wrapped(ids.fresh(), x_abs));
            if (r_abs != r_contents) {
                g.replaces = r_named ? rows[r].source : -1;
                if (r_named)
                    g.replacement.push_back(Pattern::make_old(R.texts(Span::Id), r_abs, R.texts(Span::Close)));
                else
                    g.replacement.push_back(wrapped(ids.fresh(), r_abs));
            }
        }
        if (!g.patterns.empty() || !g.replacement.empty()) out.push_back(std::move(g));
    }
    return out;
}

std::vector<Pattern> flatten(const std::vector<CandidateGroup>& groups) {
    std::vector<Pattern> out;
    for (const auto& g : groups) {
        out.insert(out.end(), g.patterns.begin(), g.patterns.end());
        out.insert(out.end(), g.replacement.begin(), g.replacement.end());
    }
    return out;
}

namespace {

struct State {
    Grammar grammar;
    std::vector<std::string> provenance;
    Evaluation ev;
    std::string key;
};

Pattern renamed(const Pattern& p, const std::map<std::string, std::string>& names) {
    auto map = [&](const Texts& in) {
        Texts out;
        for (const auto& t : in) {
            auto it = names.find(t);
            out.push_back(it == names.end() ? t : it->second);
        }
        return out;
    };
    return Pattern::make_old(map(p.texts(Span::Id)), map(p.texts(Span::Contents)), map(p.texts(Span::Close)),
                             p.frequency());
}

// Adds the group's patterns to a copy of the grammar. A single-ID pattern
// whose contents equal a stored pattern's is amalgamated with it: its ID and
// close symbols are renamed to the stored ones throughout the group.
State apply_group(const State& parent, const CandidateGroup& g, const std::string& origin) {
    std::vector<Pattern> patterns = parent.grammar.patterns();
    std::vector<std::string> provenance = parent.provenance;
    std::map<std::string, std::string> names;
    Grammar out;
    std::vector<std::string> lines;
    auto store = [&](const Pattern& p, const std::string& why) {
        const std::size_t before = out.size();
        const std::size_t at = out.add(p);
        if (at == before) lines.push_back(why);
    };
    if (g.replaces >= 0 && !g.replacement.empty())
        patterns[static_cast<std::size_t>(g.replaces)] = Pattern();
    for (std::size_t i = 0; i < patterns.size(); ++i)
        if (!patterns[i].empty()) store(patterns[i], provenance[i]);
    auto place = [&](const Pattern& raw, const std::string& why) {
        const Pattern p = renamed(raw, names);
        if (p.id_size() == 1 && p.close_size() == 1) {
            const Texts contents = p.texts(Span::Contents);
            for (const auto& q : out.patterns()) {
                if (q.id_size() < 1 || q.close_size() != 1 || q.texts(Span::Contents) != contents) continue;
                names[p[0].text] = q[0].text;
                names[p[p.size() - 1].text] = q[q.size() - 1].text;
                return;
            }
        }
        store(p, why);
    };
    for (const auto& p : g.patterns) place(p, origin);
    for (const auto& p : g.replacement) {
        if (g.replaces >= 0) {
            Pattern r = renamed(p, names);
            r.set_frequency(parent.grammar[static_cast<std::size_t>(g.replaces)].frequency());
            store(r, provenance[static_cast<std::size_t>(g.replaces)] + "; rewritten by " + origin);
        } else {
            place(p, origin);
        }
    }
    State s;
    s.grammar = std::move(out);
    s.provenance = std::move(lines);
    return s;
}

// Serialization with `%n` counters renumbered by first appearance, so
// grammars equal up to fresh-ID choice share a key.
// The line with the digits of every `%n` counter removed.
std::string mask_counters(const std::string& line) {
    std::string out;
    for (std::size_t i = 0; i < line.size(); ++i) {
        out += line[i];
        if (line[i] != '%') continue;
        while (i + 1 < line.size() && std::isdigit(static_cast<unsigned char>(line[i + 1]))) ++i;
    }
    return out;
}

std::string canonical_key(const Grammar& grammar) {
    std::vector<std::pair<std::string, std::string>> lines;
    for (const auto& p : grammar.patterns()) {
        std::string line = serialize_grammar(Grammar({p}));
        lines.emplace_back(mask_counters(line), std::move(line));
    }
    std::sort(lines.begin(), lines.end());
    std::string text;
    for (const auto& l : lines) text += l.second;
    std::map<std::string, std::size_t> names;
    std::string out;
    for (std::size_t i = 0; i < text.size();) {
        if (text[i] == '%' && (i == 0 || text[i - 1] == ' ' || text[i - 1] == '#')) {
            std::size_t j = i + 1;
            while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
            if (j > i + 1 && (j == text.size() || text[j] == ' ' || text[j] == '\n')) {
                auto [it, fresh] = names.emplace(text.substr(i, j - i), names.size() + 1);
                out += '%' + std::to_string(it->second);
                i = j;
                continue;
            }
        }
        out += text[i++];
    }
    return out;
}

// Frequencies follow usage; unused patterns are dropped. Repeats until stable.
using EvalCache = std::map<std::string, Evaluation>;

void settle(State& s, const Corpus& corpus, const Distinct& d, const LearnParams& params, bool prune,
            EvalCache& cache) {
    for (int round = 0; round < 4; ++round) {
        const std::string text = serialize_grammar(s.grammar);
        auto it = cache.find(text);
        if (it == cache.end())
            it = cache.emplace(text, evaluate(s.grammar, corpus, d, params.engine, params.workers, params.index)).first;
        s.ev = it->second;
        bool changed = false;
        std::vector<Pattern> kept;
        std::vector<std::string> lines;
        for (std::size_t i = 0; i < s.grammar.size(); ++i) {
            const std::size_t use = s.ev.usage[i];
            if (prune && use == 0) {
                changed = true;
                continue;
            }
            Pattern p = s.grammar[i];
            const std::uint64_t f = std::max<std::uint64_t>(1, use);
            if (p.frequency() != f) changed = true;
            p.set_frequency(f);
            kept.push_back(std::move(p));
            lines.push_back(s.provenance[i]);
        }
        if (!changed) break;
        s.grammar = Grammar(std::move(kept));
        s.provenance = std::move(lines);
    }
    s.key = canonical_key(s.grammar);
}

bool scored_before(const State& a, const State& b) {
    if (a.ev.score.total + kScoreEps < b.ev.score.total) return true;
    if (b.ev.score.total + kScoreEps < a.ev.score.total) return false;
    return a.key < b.key;
}

std::string kind_name(CandidateGroup::Kind k) {
    switch (k) {
        case CandidateGroup::Kind::Incorporation: return "incorporation";
        case CandidateGroup::Kind::Split: return "split";
        case CandidateGroup::Kind::SplitPlain: return "plain split";
    }
    return "";
}

std::vector<State> learn_states(const Corpus& corpus, const LearnParams& params, std::uint64_t id_floor) {
    params.check();
    const Distinct d = distinct_patterns(corpus);
    IdSource ids(next_counter(corpus.patterns, id_floor));
    EvalCache cache;
    std::vector<State> beam(1);
    settle(beam[0], corpus, d, params, true, cache);
    const std::size_t n = d.patterns.size();

    for (std::size_t pass = 1; pass <= params.passes; ++pass) {
        std::vector<State> successors;
        std::set<std::string> seen;
        for (const auto& s : beam) seen.insert(s.key);
        for (const auto& parent : beam) {
            // Map: alignments per corpus pattern, and pairings on the first pass.
            const SymbolTable table = scoring_table(parent.grammar, corpus);
            std::vector<std::vector<MultipleAlignment>> found(n);
            std::vector<std::vector<MultipleAlignment>> paired(n);
            std::vector<Grammar> as_old;
            for (const auto& p : d.patterns) as_old.push_back(Grammar({Pattern::make_plain(p.texts())}));
            const bool pairing = pass == 1;
            run_tasks(n, params.workers, [&](std::size_t i) {
                RunOptions opts;
                opts.index = params.index;
                found[i] = build_alignments({d.patterns[i]}, parent.grammar, table, params.engine, opts);
                if (found[i].size() > params.candidate_alignments) found[i].resize(params.candidate_alignments);
                paired[i].clear();
                if (!pairing) return;
                for (std::size_t j = 0; j < n; ++j) {
                    if (j == i) continue;
                    const SymbolTable t2 = scoring_table(as_old[j], corpus);
                    paired[i].push_back(build_alignments({d.patterns[i]}, as_old[j], t2, params.engine, opts).front());
                }
            });
            // Reduce: candidate groups in corpus order, round-robin by rank.
            std::vector<std::vector<std::pair<CandidateGroup, std::string>>> groups(n);
            CandidateGroup all;
            all.kind = CandidateGroup::Kind::Incorporation;
            for (std::size_t i = 0; i < n; ++i) {
                const std::string where = "pass " + std::to_string(pass) + ", corpus pattern " +
                                          std::to_string(d.first_index[i] + 1) + ", ";
                for (std::size_t a = 0; a < found[i].size(); ++a) {
                    for (auto& g : derive_candidates(found[i][a], parent.grammar, ids)) {
                        if (a == 0 && g.kind == CandidateGroup::Kind::Incorporation) all.patterns.push_back(g.patterns[0]);
                        const std::string why = where + kind_name(g.kind) + " from alignment " + std::to_string(a + 1);
                        groups[i].emplace_back(std::move(g), why);
                    }
                }
                std::size_t k = 0;
                for (std::size_t j = 0; j < n && pairing; ++j) {
                    if (j == i) continue;
                    const MultipleAlignment& al = paired[i][k++];
                    for (auto& g : derive_candidates(al, as_old[j], ids)) {
                        if (g.kind == CandidateGroup::Kind::Incorporation) continue;
                        for (auto& r : g.replacement) g.patterns.push_back(std::move(r));
                        g.replacement.clear();
                        g.replaces = -1;
                        const std::string why = where + kind_name(g.kind) + " against corpus pattern " +
                                                std::to_string(d.first_index[j] + 1);
                        groups[i].emplace_back(std::move(g), why);
                    }
                }
            }
            std::vector<State> fresh;
            auto offer = [&](State s) {
                if (fresh.size() >= params.grammar_beam * 8) return;
                if (!seen.insert(canonical_key(s.grammar)).second) return;
                fresh.push_back(std::move(s));
            };
            offer(apply_group(parent, all, "pass " + std::to_string(pass) + ", incorporation of every corpus pattern"));
            for (std::size_t rank = 0;; ++rank) {
                bool any = false;
                for (std::size_t i = 0; i < n; ++i) {
                    if (rank >= groups[i].size()) continue;
                    any = true;
                    offer(apply_group(parent, groups[i][rank].first, groups[i][rank].second));
                }
                if (!any) break;
            }
            for (auto& s : fresh) successors.push_back(std::move(s));
        }
        // Serial sift: score, order, prune.
        for (auto& s : successors) settle(s, corpus, d, params, true, cache);
        for (auto& s : successors) beam.push_back(std::move(s));
        std::sort(beam.begin(), beam.end(), scored_before);
        beam.erase(std::unique(beam.begin(), beam.end(), [](const State& a, const State& b) { return a.key == b.key; }),
                   beam.end());
        if (beam.size() > params.grammar_beam) beam.resize(params.grammar_beam);
    }
    return beam;
}

LearnedGrammar finish(State s) { return LearnedGrammar{std::move(s.grammar), s.ev.score, std::move(s.provenance)}; }

}  // namespace

std::vector<LearnedGrammar> learn(const Corpus& corpus, const LearnParams& params) {
    std::vector<LearnedGrammar> out;
    for (auto& s : learn_states(corpus, params, 1)) out.push_back(finish(std::move(s)));
    return out;
}

LearnedGrammar learn_from_encodings(const LearnedGrammar& grammar, const Corpus& corpus, const LearnParams& params) {
    params.check();
    LearnedGrammar current = grammar;
    current.provenance.resize(current.grammar.size(), "given");
    const Distinct d = distinct_patterns(corpus);
    for (std::size_t round = 0; round < params.encoding_passes; ++round) {
        std::vector<Pattern> level;
        for (auto& e : encode_corpus(current.grammar, corpus, params.engine))
            if (!e.empty()) level.push_back(std::move(e));
        if (level.empty()) break;
        const Corpus second = Corpus::make(std::move(level));
        const std::vector<State> found = learn_states(second, params, next_counter(current.grammar.patterns(), 1));
        State s;
        s.grammar = current.grammar;
        s.provenance = current.provenance;
        const std::string tag = "encoding round " + std::to_string(round + 1) + ": ";
        for (std::size_t i = 0; i < found.front().grammar.size(); ++i) {
            const std::size_t before = s.grammar.size();
            if (s.grammar.add(found.front().grammar[i]) == before)
                s.provenance.push_back(tag + found.front().provenance[i]);
        }
        EvalCache cache;
        settle(s, corpus, d, params, false, cache);
        current = finish(std::move(s));
    }
    return current;
}

GeneralizationReport generalization_report(const Grammar& grammar, const Corpus& training, const Corpus& held_out,
                                           const EngineParams& engine, std::size_t permutations,
                                           std::uint64_t seed) {
    const SymbolTable table = scoring_table(grammar, training);
    auto cost = [&](const Pattern& p) {
        return derive_encoding(build_alignments({p}, grammar, table, engine).front(), table).cost_bits;
    };
    GeneralizationReport r;
    std::mt19937_64 rng(seed);
    double control_sum = 0;
    for (const auto& p : held_out.patterns) {
        r.held_out_bits.push_back(cost(p));
        for (std::size_t k = 0; k < permutations; ++k) {
            Texts t = p.texts();
            std::shuffle(t.begin(), t.end(), rng);
            control_sum += cost(Pattern::make_new(t));
            ++r.controls;
        }
    }
    r.held_out_mean = std::accumulate(r.held_out_bits.begin(), r.held_out_bits.end(), 0.0) /
                      static_cast<double>(r.held_out_bits.size());
    r.control_mean = r.controls ? control_sum / static_cast<double>(r.controls) : 0;
    return r;
}

}  // namespace sp
