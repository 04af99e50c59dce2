#include "sp/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <random>

#include "sp/engine.hpp"
#include "sp/io.hpp"
#include "sp/learner.hpp"
#include "sp/matcher.hpp"
#include "sp/neural.hpp"
#include "sp/runtime.hpp"

#ifndef SP_VERSION
#define SP_VERSION "unknown"
#endif

namespace sp {

namespace {

std::string fixed(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string text_fingerprint(std::string_view text) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(fnv1a(text)),
                  static_cast<unsigned long long>(fnv1a(text, 0x84222325cbf29ce4ull)));
    return buf;
}

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string join(const std::vector<Symbol>& symbols) {
    std::string out;
    for (const auto& s : symbols) out += (out.empty() ? "" : " ") + s.text;
    return out;
}

struct ParseOptions {
    std::string grammar, news, render = "rows", index = "off", audit;
    std::size_t beam = 50, top = 5, workers = 1;
    bool probs = false;
};

int cmd_parse(const ParseOptions& o, std::ostream& out, std::ostream& err) {
    const std::string grammar_text = read_file(o.grammar);
    const std::string new_text = read_file(o.news);
    const Grammar grammar = parse_grammar(grammar_text);
    const std::vector<Pattern> news = parse_patterns(new_text);
    if (news.empty()) throw Error("no New pattern in " + o.news);

    EngineParams params;
    params.alignment_beam = o.beam;
    params.top_k = o.top;
    MatchIndex index;
    std::vector<StageAudit> stages;
    RunOptions run;
    run.workers = o.workers;
    run.index = o.index == "on" ? &index : nullptr;
    if (!o.audit.empty()) run.audit = [&](const StageAudit& s) { stages.push_back(s); };

    const auto alignments = build_alignments(news, grammar, params, run);
    const std::vector<double> probs = o.probs ? alignment_probabilities(alignments) : std::vector<double>{};
    const Orientation orient = o.render == "cols" ? Orientation::Columns : Orientation::Rows;
    for (std::size_t k = 0; k < alignments.size(); ++k) {
        const auto& a = alignments[k];
        out << "alignment " << k + 1 << " score_bits " << fixed(a.score());
        if (o.probs) out << " probability " << fixed(probs[k], 12);
        out << "\n" << render_alignment(a, orient);
        const Encoding enc = derive_encoding(a, grammar.table());
        out << "encoding " << join(enc.symbols) << " (" << fixed(enc.cost_bits) << " bits)\n\n";
    }
    if (run.index) err << "index hits " << index.hits() << " misses " << index.misses() << "\n";

    if (!o.audit.empty()) {
        AuditManifest m;
        m.run_id = text_fingerprint(grammar_text + '\x1f' + new_text + '\x1f' + std::to_string(o.beam) + '/' +
                                    std::to_string(o.top));
        m.run_id.resize(16);
        m.params = {{"beam", std::to_string(o.beam)},
                    {"top", std::to_string(o.top)},
                    {"workers", std::to_string(o.workers)},
                    {"index", o.index},
                    {"match_beam", std::to_string(params.match_budget.beam_width)},
                    {"max_stages", std::to_string(params.max_stages)},
                    {"patience", std::to_string(params.patience)}};
        m.inputs = {{"grammar", text_fingerprint(grammar_text)}, {"new", text_fingerprint(new_text)}};
        m.timestamp = utc_now();
        write_audit(stages, m, o.audit);
    }
    return 0;
}

struct LearnOptions {
    std::string corpus, out_path, index = "off";
    std::size_t passes = 2, grammar_beam = 4, encoding_passes = 0, workers = 1;
};

int cmd_learn(const LearnOptions& o, std::ostream& out) {
    const Corpus corpus = Corpus::make(parse_patterns(read_file(o.corpus)));
    MatchIndex index;
    LearnParams params;
    params.passes = o.passes;
    params.grammar_beam = o.grammar_beam;
    params.encoding_passes = o.encoding_passes;
    params.workers = o.workers;
    params.index = o.index == "on" ? &index : nullptr;
    LearnedGrammar best = learn(corpus, params).front();
    if (o.encoding_passes > 0) best = learn_from_encodings(best, corpus, params);

    out << "empty_bits " << fixed(corpus.raw_cost_bits) << "\n";
    out << "total_bits " << fixed(best.score.total) << "\n";
    out << "g_bits " << fixed(best.score.g_bits) << "\n";
    out << "e_bits " << fixed(best.score.e_bits) << "\n";
    std::string provenance;
    for (std::size_t i = 0; i < best.provenance.size(); ++i)
        provenance += std::to_string(i + 1) + "\t" + best.provenance[i] + "\n";
    const std::string text = serialize_grammar(best.grammar);
    if (o.out_path.empty()) {
        out << text;
    } else {
        write_file(o.out_path, text);
        write_file(o.out_path + ".provenance", provenance);
        out << "wrote " << o.out_path << "\n";
    }
    return 0;
}

struct NeuralOptions {
    std::string grammar, input, trace_path;
    std::size_t steps = 8;
    NeuralParams params;
};

int cmd_neural(const NeuralOptions& o, std::ostream& out) {
    const Grammar grammar = parse_grammar(read_file(o.grammar));
    const std::vector<Pattern> inputs = parse_patterns(read_file(o.input));
    Network proto = Network::compile(grammar, o.params);
    out << "assemblies " << proto.assemblies().size() << " id_fibres " << proto.id_fibres() << "\n";
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        Network net = proto;
        const auto found = recognize(net, inputs[k], o.steps, o.params);
        out << "input " << k + 1 << ": " << join(inputs[k].symbols()) << "\n";
        if (found.empty()) out << "  recognized none\n";
        for (const auto& r : found)
            out << "  recognized " << r.id << " peak_rate " << fixed(r.peak_rate) << " peak_step " << r.peak_step
                << "\n";
    }
    if (!o.trace_path.empty() && !inputs.empty()) {
        Network net = proto;
        write_file(o.trace_path, format_trace(trace(net, inputs.front(), o.steps, 3 * o.params.settle_tau, o.params)));
    }
    return 0;
}

int cmd_validate(const std::string& path, std::ostream& out) {
    Grammar grammar;
    try {
        grammar = parse_grammar(read_file(path));
    } catch (const ParseError& e) {
        out << path << ": " << e.what() << "\n";
        return 1;
    }
    const auto issues = validate_grammar(grammar);
    for (const auto& i : issues) out << path << ": " << i.message << "\n";
    if (!issues.empty()) return 1;
    out << path << ": ok, " << grammar.size() << " patterns\n";
    return 0;
}

// Deterministic synthetic workloads; stdout carries results only, timings go
// to stderr.
int cmd_bench(const std::string& suite, std::size_t workers, std::ostream& out, std::ostream& err) {
    std::mt19937_64 rng(7);
    auto sym = [&](std::size_t alphabet) { return "s" + std::to_string(rng() % alphabet); };
    auto random_pattern = [&](std::size_t len, std::size_t alphabet) {
        std::vector<std::string> t;
        for (std::size_t i = 0; i < len; ++i) t.push_back(sym(alphabet));
        return t;
    };
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };

    if (suite == "matcher") {
        double sum = 0;
        for (int i = 0; i < 200; ++i) {
            const Pattern d = Pattern::make_new(random_pattern(30, 6));
            const Pattern t = Pattern::make_plain(random_pattern(30, 6));
            const std::vector<Pattern> pair{d, t};
            const SymbolTable table = build_symbol_table({&pair});
            sum += find_matches(d, t, table, SearchBudget{1000, 1}).front().score_bits;
        }
        out << "suite matcher\npairs 200\nmean_top_bits " << fixed(sum / 200) << "\n";
    } else if (suite == "engine") {
        double sum = 0;
        for (int i = 0; i < 20; ++i) {
            std::vector<Pattern> ps;
            for (int k = 0; k < 4; ++k)
                ps.push_back(Pattern::make_old({"P" + std::to_string(k)}, random_pattern(5, 5), {"#P" + std::to_string(k)}));
            const Grammar g(ps);
            RunOptions run;
            run.workers = workers;
            sum += build_alignments({Pattern::make_new(random_pattern(8, 5))}, g, EngineParams{}, run).front().score();
        }
        out << "suite engine\ninstances 20\nmean_best_bits " << fixed(sum / 20) << "\n";
    } else if (suite == "learner" || suite == "runtime") {
        std::vector<std::vector<std::string>> stems;
        for (int k = 0; k < 6; ++k) stems.push_back(random_pattern(3, 12));
        const std::size_t n = suite == "runtime" ? 200 : 12;
        std::vector<Pattern> corpus;
        for (std::size_t i = 0; i < n; ++i) {
            auto a = stems[rng() % stems.size()], b = stems[rng() % stems.size()];
            a.insert(a.end(), b.begin(), b.end());
            corpus.push_back(Pattern::make_new(a));
        }
        const Corpus c = Corpus::make(corpus);
        if (suite == "learner") {
            LearnParams p;
            p.workers = workers;
            const LearnedGrammar best = learn(c, p).front();
            out << "suite learner\ncorpus " << n << "\nempty_bits " << fixed(c.raw_cost_bits) << "\ntotal_bits "
                << fixed(best.score.total) << "\npatterns " << best.grammar.size() << "\n";
        } else {
            std::vector<Pattern> gp;
            for (std::size_t k = 0; k < stems.size(); ++k)
                gp.push_back(Pattern::make_old({"%" + std::to_string(k + 1)}, stems[k], {"#%" + std::to_string(k + 1)}));
            const Grammar g(gp);
            const LearnParams p;
            const auto s1 = std::chrono::steady_clock::now();
            const GrammarScore one = grammar_score(g, c, p.engine, 1);
            const auto s2 = std::chrono::steady_clock::now();
            const GrammarScore many = grammar_score(g, c, p.engine, workers);
            const auto s3 = std::chrono::steady_clock::now();
            const double t1 = std::chrono::duration<double>(s2 - s1).count();
            const double tn = std::chrono::duration<double>(s3 - s2).count();
            out << "suite runtime\ncorpus " << n << "\ntotal_bits " << fixed(one.total) << "\nidentical "
                << (one.total == many.total ? "yes" : "no") << "\n";
            err << "workers 1: " << fixed(t1, 3) << " s, workers " << workers << ": " << fixed(tn, 3)
                << " s, speedup " << fixed(t1 / tn, 2) << "\n";
        }
    } else if (suite == "neural") {
        std::size_t recognized = 0;
        for (int i = 0; i < 50; ++i) {
            const Grammar g({Pattern::make_old({"X"}, random_pattern(6, 20), {"#X"})});
            Network net = Network::compile(g);
            recognized += recognize(net, Pattern::make_new(g[0].texts(Span::Contents)), 4).size();
        }
        out << "suite neural\nassemblies 50\nrecognized " << recognized << "\n";
    } else {
        err << "unknown suite '" << suite << "' (matcher, engine, learner, runtime, neural)\n";
        return 2;
    }
    err << "elapsed " << fixed(elapsed(), 3) << " s\n";
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"SP multiple alignment, learning and neural simulation"};
    app.set_version_flag("--version", std::string(SP_VERSION));
    app.require_subcommand(1);

    ParseOptions po;
    auto* parse = app.add_subcommand("parse", "Build multiple alignments of New patterns against a grammar");
    parse->add_option("--grammar", po.grammar, "Grammar file")->required();
    parse->add_option("--new", po.news, "New pattern file")->required();
    parse->add_option("--beam", po.beam, "Partial alignments kept per stage")->check(CLI::PositiveNumber);
    parse->add_option("--top", po.top, "Alignments printed")->check(CLI::PositiveNumber);
    parse->add_option("--render", po.render, "Layout")->check(CLI::IsMember({"rows", "cols"}));
    parse->add_option("--workers", po.workers)->check(CLI::PositiveNumber);
    parse->add_option("--index", po.index, "Match index")->check(CLI::IsMember({"on", "off"}));
    parse->add_option("--audit", po.audit, "Write the stage audit trail to this directory");
    parse->add_flag("--probs", po.probs, "Print relative probabilities");

    LearnOptions lo;
    auto* learn_cmd = app.add_subcommand("learn", "Induce a grammar from a corpus");
    learn_cmd->add_option("--corpus", lo.corpus, "Corpus file, one New pattern per line")->required();
    learn_cmd->add_option("--passes", lo.passes)->check(CLI::PositiveNumber);
    learn_cmd->add_option("--grammar-beam", lo.grammar_beam)->check(CLI::PositiveNumber);
    learn_cmd->add_option("--encoding-passes", lo.encoding_passes)->check(CLI::NonNegativeNumber);
    learn_cmd->add_option("--out", lo.out_path, "Grammar file to write; provenance goes to <out>.provenance");
    learn_cmd->add_option("--workers", lo.workers)->check(CLI::PositiveNumber);
    learn_cmd->add_option("--index", lo.index, "Match index")->check(CLI::IsMember({"on", "off"}));

    NeuralOptions no;
    auto* neural = app.add_subcommand("neural", "Recognize inputs with the neural simulation of a grammar");
    neural->add_option("--grammar", no.grammar, "Grammar file")->required();
    neural->add_option("--input", no.input, "Input patterns, one per line")->required();
    neural->add_option("--steps", no.steps)->check(CLI::PositiveNumber);
    neural->add_option("--trace", no.trace_path, "Per-step rates for the first input");
    neural->add_option("--baseline", no.params.baseline_rate);
    neural->add_option("--gain", no.params.inhibition_gain);
    neural->add_option("--tau", no.params.settle_tau);
    neural->add_option("--threshold", no.params.recognition_threshold);

    std::string suite;
    std::size_t bench_workers = 8;
    auto* bench = app.add_subcommand("bench", "Run a synthetic benchmark suite");
    bench->add_option("--suite", suite, "matcher, engine, learner, runtime or neural")->required();
    bench->add_option("--workers", bench_workers)->check(CLI::PositiveNumber);

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "Check a grammar file");
    validate->add_option("--grammar", validate_path, "Grammar file")->required();

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*parse) return cmd_parse(po, out, err);
        if (*learn_cmd) return cmd_learn(lo, out);
        if (*neural) return cmd_neural(no, out);
        if (*bench) return cmd_bench(suite, bench_workers, out, err);
        if (*validate) return cmd_validate(validate_path, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace sp
