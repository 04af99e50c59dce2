// One line per acceptance criterion: `<id> PASS|FAIL <detail>`.
// Arguments select criteria by id; none runs all. Exit status 1 when any
// selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "sp/cli.hpp"
#include "sp/engine.hpp"
#include "sp/io.hpp"
#include "sp/learner.hpp"
#include "sp/neural.hpp"

using namespace sp;

namespace {

const std::string kFix = SP_FIXTURES;

struct Verdict {
    bool pass;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string fixture(const std::string& name) { return read_file(kFix + "/" + name); }

std::vector<std::string> letters(const std::string& s) {
    std::vector<std::string> out;
    for (char c : s) out.emplace_back(1, c);
    return out;
}

std::string cli_stdout(std::vector<std::string> args, int* code = nullptr) {
    args.insert(args.begin(), "sp");
    std::ostringstream out, err;
    const int rc = run_cli(args, out, err);
    if (code) *code = rc;
    return out.str();
}

Verdict golden(const std::string& prefix, Orientation orient, std::size_t rows_expected) {
    const Grammar g = parse_grammar(fixture(prefix + "_grammar.txt"));
    const auto news = parse_patterns(fixture(prefix + "_new.txt"));
    const auto t0 = Clock::now();
    const auto as = build_alignments(news, g, EngineParams{});
    const double dt = seconds_since(t0);
    const auto& top = as.front();
    const RenderedAlignment want = parse_rendering(fixture(prefix + "_figure.txt"), orient);
    const bool same = same_alignment(rendered_view(top), want);
    std::set<long> sources;
    for (const auto& r : top.rows())
        if (r.source >= 0) sources.insert(r.source);
    const bool rows_ok = sources.size() == rows_expected && top.rows().size() == rows_expected + 1;
    return {same && rows_ok && dt < 5.0, std::string("figure ") + (same ? "matches" : "differs") + ", " +
                                             std::to_string(sources.size()) + " Old patterns used, " +
                                             fmt("%.3f s", dt)};
}

Verdict c1() { return golden("parsing", Orientation::Rows, 8); }
Verdict c2() { return golden("class", Orientation::Columns, 4); }

Verdict c3() {
    std::mt19937_64 rng(20240501);
    std::size_t total = 0, exact = 0, above = 0, short_total = 0, short_exact = 0;
    for (int i = 0; i < 600; ++i) {
        const std::size_t alphabet = 2 + rng() % 9;
        const auto table = oracle::uniform_table(alphabet);
        const std::size_t ld = 1 + rng() % 50, lt = 1 + rng() % 50;
        const Pattern d = Pattern::make_new(oracle::random_texts(rng, ld, alphabet));
        const Pattern t = Pattern::make_plain(oracle::random_texts(rng, lt, alphabet));
        const auto r = find_matches(d, t, table, SearchBudget{1000, 1});
        const double got = r.empty() ? 0 : r.front().score_bits;
        const double want = oracle::weighted_lcs(d, t, table);
        const bool hit = std::abs(got - want) <= 1e-9 * std::max(1.0, want);
        ++total;
        exact += hit;
        above += got > want + 1e-9;
        if (ld <= 20 && lt <= 20) {
            ++short_total;
            short_exact += hit;
        }
    }
    const double rate = static_cast<double>(exact) / total;
    return {rate >= 0.99 && above == 0 && short_exact == short_total,
            std::to_string(exact) + "/" + std::to_string(total) + " exact, " + std::to_string(above) +
                " above optimum, " + std::to_string(short_exact) + "/" + std::to_string(short_total) +
                " exact at lengths <= 20"};
}

struct Micro {
    Grammar grammar;
    std::vector<Pattern> news;
};

Micro micro(std::mt19937_64& rng) {
    const std::size_t alphabet = 3 + rng() % 4;
    const std::size_t count = 1 + rng() % 4;
    std::vector<Pattern> ps;
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t len = 2 + rng() % 5;  // id + contents + close <= 6
        std::vector<std::string> contents;
        for (std::size_t k = 0; k + 2 < len; ++k)
            contents.push_back(rng() % 5 == 0 ? "P" + std::to_string(rng() % count) : oracle::random_symbol(rng, alphabet));
        if (contents.empty()) contents.push_back(oracle::random_symbol(rng, alphabet));
        ps.push_back(Pattern::make_old({"P" + std::to_string(i)}, contents, {"#P" + std::to_string(i)}, 1 + rng() % 3));
    }
    return {Grammar(ps), {Pattern::make_new(oracle::random_texts(rng, 1 + rng() % 8, alphabet))}};
}

EngineParams generous() {
    EngineParams p;
    p.match_budget = {2000, 500, true};
    p.alignment_beam = 2000;
    p.max_stages = 3;
    p.top_k = 5;
    p.patience = 3;
    return p;
}

Verdict c4() {
    std::mt19937_64 rng(12345);
    const std::size_t n = 120;
    std::size_t agree = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const Micro m = micro(rng);
        const double want = oracle::best_alignment(m.news, m.grammar, m.grammar.table(), 3).score;
        const double got = build_alignments(m.news, m.grammar, generous()).front().score();
        agree += std::abs(got - want) <= 1e-9;
    }
    return {agree == n, std::to_string(agree) + "/" + std::to_string(n) + " instances match exhaustive enumeration"};
}

Corpus shared_suffix() {
    std::vector<Pattern> ps;
    for (int i = 0; i < 5; ++i) {
        ps.push_back(Pattern::make_new(letters("johnruns")));
        ps.push_back(Pattern::make_new(letters("maryruns")));
    }
    return Corpus::make(ps);
}

Verdict c5a() {
    std::vector<Pattern> ps(10, Pattern::make_new({"a", "b", "c", "d", "e"}));
    const Corpus c = Corpus::make(ps);
    const LearnParams p;
    const double empty = grammar_score(Grammar(), c, p.engine).total;
    const double best = learn(c, p).front().score.total;
    return {best < empty, "best " + fmt("%.3f", best) + " bits, empty grammar " + fmt("%.3f", empty) + " bits"};
}

Verdict c5b() {
    const Corpus c = shared_suffix();
    const LearnParams p;
    const LearnedGrammar best = learn(c, p).front();
    const auto opt = oracle::closure_optimum(c, p.engine, 2);
    const std::vector<std::string> runs = letters("runs");
    auto has_runs = [&](const Grammar& g) {
        return std::any_of(g.patterns().begin(), g.patterns().end(),
                           [&](const Pattern& q) { return q.texts(Span::Contents) == runs; });
    };
    const bool optimal = std::abs(best.score.total - opt.total) <= 1e-9;
    const bool contains = has_runs(best.grammar);
    return {contains && optimal, std::string("pattern 'r u n s' ") + (contains ? "present" : "absent") +
                                     "; learned " + fmt("%.3f", best.score.total) + " bits, closure optimum " +
                                     fmt("%.3f", opt.total) + " bits over " + std::to_string(opt.visited) +
                                     " grammars (optimum " + (has_runs(opt.grammar) ? "has" : "lacks") +
                                     " 'r u n s')"};
}

Verdict c5c() {
    // Number agreement: the determiner fixes the verb across the adjective.
    const std::vector<std::string> det{"this", "these"}, verb{"swims", "run"}, adj{"big", "red", "old"};
    std::vector<Pattern> ps;
    std::map<std::string, std::uint64_t> uses;
    for (int copy = 0; copy < 2; ++copy)
        for (std::size_t n = 0; n < 2; ++n)
            for (const auto& a : adj) {
                ps.push_back(Pattern::make_new(letters(det[n] + a + verb[n])));
                ++uses[det[n]];
                ++uses[a];
                ++uses[verb[n]];
            }
    const Corpus c = Corpus::make(ps);
    std::vector<Pattern> lexicon;
    std::map<std::string, std::string> id_of;
    for (const auto& w : {det[0], det[1], adj[0], adj[1], adj[2], verb[0], verb[1]}) {
        const std::string id = "%" + std::to_string(lexicon.size() + 1);
        id_of[w] = id;
        lexicon.push_back(Pattern::make_old({id}, letters(w), {"#" + id}, uses[w]));
    }
    LearnParams p;
    p.encoding_passes = 1;
    const Grammar level1(lexicon);
    const LearnedGrammar start{level1, grammar_score(level1, c, p.engine), {}};
    const LearnedGrammar out = learn_from_encodings(start, c, p);
    std::string found;
    for (std::size_t i = level1.size(); i < out.grammar.size(); ++i) {
        const auto t = out.grammar[i].texts(Span::Contents);
        for (std::size_t n = 0; n < 2; ++n) {
            const bool d = std::find(t.begin(), t.end(), id_of[det[n]]) != t.end();
            const bool v = std::find(t.begin(), t.end(), id_of[verb[n]]) != t.end();
            if (d && v && found.empty()) found = out.grammar[i].key();
        }
    }
    return {!found.empty(), found.empty() ? "no second-level pattern joins a determiner with its verb"
                                          : "second-level pattern '" + found + "', total " +
                                                fmt("%.3f", out.score.total) + " bits vs lexicon " +
                                                fmt("%.3f", start.score.total) + " bits"};
}

Verdict c6() {
    const std::string dir = std::filesystem::temp_directory_path() / "sp_acceptance";
    std::filesystem::create_directories(dir);
    const std::string corpus = dir + "/corpus.txt";
    write_file(corpus, "j o h n r u n s\nm a r y r u n s\nj o h n r u n s\n");
    std::vector<std::vector<std::string>> commands;
    for (const char* f : {"parsing", "class"})
        commands.push_back({"parse", "--grammar", kFix + "/" + f + "_grammar.txt", "--new",
                            kFix + "/" + f + "_new.txt", "--probs"});
    commands.push_back({"learn", "--corpus", corpus, "--passes", "1"});
    std::size_t runs = 0, differ = 0;
    for (const auto& base : commands) {
        std::string ref;
        for (const char* w : {"1", "2", "4", "8"})
            for (const char* idx : {"off", "on"}) {
                auto args = base;
                args.insert(args.end(), {"--workers", w, "--index", idx});
                int rc = 0;
                const std::string out = cli_stdout(args, &rc);
                if (rc != 0) ++differ;
                if (ref.empty()) ref = out;
                differ += out != ref;
                ++runs;
            }
    }
    return {differ == 0, std::to_string(runs) + " runs over " + std::to_string(commands.size()) + " inputs, " +
                             std::to_string(differ) + " differing from workers 1 without index"};
}

Verdict c7() {
    const Grammar g = parse_grammar(fixture("parsing_grammar.txt"));
    const auto news = parse_patterns(fixture("parsing_new.txt"));
    MatchIndex index;
    RunOptions run;
    run.index = &index;
    auto t0 = Clock::now();
    const auto first = build_alignments(news, g, EngineParams{}, run);
    const double cold = seconds_since(t0);
    const auto h0 = index.hits(), m0 = index.misses();
    t0 = Clock::now();
    const auto second = build_alignments(news, g, EngineParams{}, run);
    const double warm = seconds_since(t0);
    const double hits = static_cast<double>(index.hits() - h0), misses = static_cast<double>(index.misses() - m0);
    const double rate = hits / (hits + misses);
    bool same = first.size() == second.size();
    for (std::size_t i = 0; same && i < first.size(); ++i) same = first[i].serialize() == second[i].serialize();
    return {rate > 0.9 && same, "second-run hit rate " + fmt("%.4f", rate) + ", outputs " +
                                    (same ? "identical" : "differ") + "; wall clock " + fmt("%.4f", cold) + " s -> " +
                                    fmt("%.4f", warm) + " s" + (warm < cold ? "" : " (not faster; timing is advisory)")};
}

double id_rate(const Network& n, std::size_t a) { return n.symbols()[n.assemblies()[a].id_symbol].rate; }

Verdict c8a() {
    const NeuralParams p;
    Network n = Network::compile(parse_grammar(fixture("class_grammar.txt")), p);
    bool exact = true;
    for (int s = 0; s <= 50; ++s) {
        for (const auto& sym : n.symbols()) exact = exact && sym.rate == p.baseline_rate;
        n.step(p);
    }
    return {exact, std::to_string(n.symbols().size()) + " symbols at exactly 20 over 50 idle steps"};
}

Verdict c8b() {
    const NeuralParams p;
    const Grammar g = parse_grammar("1 X | a b c d | #X\n");
    Network n = Network::compile(g, p);
    n.present(Pattern::make_new({"a", "b", "c", "d"}));
    double peak = 0;
    for (int s = 0; s < 4; ++s) {
        n.step(p);
        peak = std::max(peak, id_rate(n, 0));
    }
    n.clear_input();
    for (std::size_t s = 0; s < 3 * p.settle_tau; ++s) n.step(p);
    const double after = id_rate(n, 0);
    const bool above = peak > p.recognition_threshold * p.baseline_rate;
    const bool settled = std::abs(after - p.baseline_rate) <= 0.05 * p.baseline_rate;
    return {above && settled, "peak " + fmt("%.3f", peak) + " vs threshold " +
                                  fmt("%.3f", p.recognition_threshold * p.baseline_rate) + ", rate " +
                                  fmt("%.3f", after) + " after 3 tau steps"};
}

Verdict c8c() {
    const NeuralParams p;
    std::mt19937_64 rng(8);
    std::size_t tried = 0, rejected = 0;
    for (std::size_t len : {2, 3, 4, 5}) {
        std::vector<std::string> contents;
        for (std::size_t i = 0; i < len; ++i) contents.push_back("s" + std::to_string(i) + "_" + std::to_string(rng() % 100));
        const Grammar g({Pattern::make_old({"X"}, contents, {"#X"})});
        auto perm = contents;
        std::sort(perm.begin(), perm.end());
        do {
            if (perm == contents) continue;
            Network n = Network::compile(g, p);
            ++tried;
            rejected += recognize(n, Pattern::make_new(perm), 8, p).empty();
        } while (std::next_permutation(perm.begin(), perm.end()));
    }
    return {tried > 0 && rejected == tried,
            std::to_string(rejected) + "/" + std::to_string(tried) + " non-identity permutations rejected"};
}

Verdict c8d() {
    std::mt19937_64 rng(88);
    const std::size_t grammars = 30;
    std::size_t agree = 0;
    for (std::size_t gi = 0; gi < grammars; ++gi) {
        const std::size_t count = 2 + rng() % 4;
        std::vector<Pattern> ps;
        for (std::size_t i = 0; i < count; ++i) {
            std::vector<std::string> contents;
            const std::size_t len = 2 + rng() % 4;
            for (std::size_t k = 0; k < len; ++k) contents.push_back("p" + std::to_string(i) + "s" + std::to_string(k));
            ps.push_back(Pattern::make_old({"X" + std::to_string(i)}, contents, {"#X" + std::to_string(i)}));
        }
        const Grammar g(ps);
        std::vector<std::size_t> order(count);
        for (std::size_t i = 0; i < count; ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), rng);
        order.resize(1 + rng() % count);
        std::vector<std::string> input;
        for (std::size_t i : order) {
            const auto t = g[i].texts(Span::Contents);
            input.insert(input.end(), t.begin(), t.end());
        }
        const Pattern P = Pattern::make_new(input);
        std::set<std::size_t> from_alignments, recognized;
        for (const auto& a : build_alignments({P}, g, EngineParams{}))
            if (a.score() > 0)
                for (const auto& r : a.rows())
                    if (r.source >= 0) from_alignments.insert(static_cast<std::size_t>(r.source));
        Network n = Network::compile(g);
        for (const auto& r : recognize(n, P, 8)) recognized.insert(r.assembly);
        agree += recognized == from_alignments;
    }
    return {agree == grammars, std::to_string(agree) + "/" + std::to_string(grammars) +
                                   " grammars where recognized assemblies equal Old patterns of positive alignments"};
}

std::vector<std::pair<double, double>> score_prob_lines(const std::string& out) {
    std::vector<std::pair<double, double>> v;
    std::istringstream in(out);
    std::string line;
    while (std::getline(in, line)) {
        double s = 0, p = 0;
        if (std::sscanf(line.c_str(), "alignment %*u score_bits %lf probability %lf", &s, &p) == 2) v.emplace_back(s, p);
    }
    return v;
}

bool normalized_and_ordered(const std::vector<double>& scores, const std::vector<double>& probs, double tol) {
    double sum = 0;
    for (double p : probs) sum += p;
    if (std::abs(sum - 1) > tol) return false;
    for (std::size_t i = 0; i < scores.size(); ++i)
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (scores[i] > scores[j] && !(probs[i] > probs[j])) return false;
            if (scores[i] == scores[j] && probs[i] != probs[j]) return false;
        }
    return true;
}

Verdict c9() {
    std::size_t parses = 0, good = 0;
    for (const char* f : {"parsing", "class"}) {
        const auto lines = score_prob_lines(cli_stdout({"parse", "--grammar", kFix + "/" + f + "_grammar.txt",
                                                        "--new", kFix + "/" + f + "_new.txt", "--probs"}));
        std::vector<double> s, p;
        for (const auto& [a, b] : lines) {
            s.push_back(a);
            p.push_back(b);
        }
        ++parses;
        // Printed with 12 decimals.
        good += !lines.empty() && normalized_and_ordered(s, p, 1e-9);
    }
    std::mt19937_64 rng(99);
    for (int i = 0; i < 100; ++i) {
        const Micro m = micro(rng);
        EngineParams e;
        e.top_k = 8;
        const auto as = build_alignments(m.news, m.grammar, e);
        std::vector<double> s;
        for (const auto& a : as) s.push_back(a.score());
        ++parses;
        good += normalized_and_ordered(s, alignment_probabilities(as), 1e-9);
    }
    return {good == parses, std::to_string(good) + "/" + std::to_string(parses) + " parses normalized and ordered"};
}

Grammar random_grammar(std::mt19937_64& rng) {
    std::vector<Pattern> ps;
    const std::size_t count = 1 + rng() % 6;
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint64_t freq = 1 + rng() % 1000;
        const auto contents = oracle::random_texts(rng, 1 + rng() % 7, 2 + rng() % 6);
        if (rng() % 3 == 0) {
            ps.push_back(Pattern::make_plain(contents, freq));
        } else {
            const std::string id = "N" + std::to_string(i);
            std::vector<std::string> ids{id};
            if (rng() % 4 == 0) ids.push_back(std::to_string(rng() % 10));
            ps.push_back(Pattern::make_old(ids, contents, rng() % 5 ? std::vector<std::string>{"#" + id}
                                                                    : std::vector<std::string>{},
                                           freq));
        }
    }
    return Grammar(ps);
}

Verdict c10() {
    std::size_t checks = 0, failures = 0;
    auto check = [&](bool ok) {
        ++checks;
        failures += !ok;
    };
    auto faithful = [&](const MultipleAlignment& a) {
        for (Orientation o : {Orientation::Rows, Orientation::Columns})
            check(same_alignment(parse_rendering(render_alignment(a, o), o), rendered_view(a)));
    };
    auto round_trip = [&](const Grammar& g) {
        const std::string s = serialize_grammar(g);
        const Grammar again = parse_grammar(s);
        check(again.patterns() == g.patterns() && serialize_grammar(again) == s);
    };
    for (const char* f : {"parsing", "class"}) {
        const Grammar g = parse_grammar(fixture(std::string(f) + "_grammar.txt"));
        round_trip(g);
        for (const auto& a : build_alignments(parse_patterns(fixture(std::string(f) + "_new.txt")), g, EngineParams{}))
            faithful(a);
    }
    std::mt19937_64 rng(10);
    for (int i = 0; i < 200; ++i) {
        const Grammar g = random_grammar(rng);
        round_trip(g);
        const Pattern n = Pattern::make_new(oracle::random_texts(rng, 1 + rng() % 8, 4));
        EngineParams e;
        e.top_k = 3;
        for (const auto& a : build_alignments({n}, g, e)) faithful(a);
    }
    return {failures == 0, std::to_string(checks - failures) + "/" + std::to_string(checks) + " round-trip and rendering checks"};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"1", c1},     {"2", c2},     {"3", c3},     {"4", c4},     {"5a", c5a},   {"5b", c5b},
        {"5c", c5c},   {"6", c6},     {"7", c7},     {"8a", c8a},   {"8b", c8b},   {"8c", c8c},
        {"8d", c8d},   {"9", c9},     {"10", c10}};
    const std::set<std::string> selected(argv + 1, argv + argc);
    int failed = 0;
    for (const auto& [id, run] : criteria) {
        if (!selected.empty() && !selected.count(id)) continue;
        Verdict v{false, ""};
        const auto t0 = Clock::now();
        try {
            v = run();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        std::cout << "criterion " << id << (v.pass ? " PASS " : " FAIL ") << v.detail << " ["
                  << fmt("%.2f", seconds_since(t0)) << " s]" << std::endl;
        failed += !v.pass;
    }
    return failed ? 1 : 0;
}
