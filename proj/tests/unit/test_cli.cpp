#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "sp/cli.hpp"
#include "sp/io.hpp"

using namespace sp;

namespace {

const std::string kFix = SP_FIXTURES;

struct Run {
    int code;
    std::string out, err;
};

Run cli(std::vector<std::string> args) {
    args.insert(args.begin(), "sp");
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "sp_cli_unit";
    std::filesystem::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("usage errors exit 2") {
    CHECK(cli({}).code == 2);
    CHECK(cli({"frobnicate"}).code == 2);
    CHECK(cli({"parse", "--grammar", "x"}).code == 2);
    CHECK(cli({"parse", "--grammar", "x", "--new", "y", "--bogus"}).code == 2);
    CHECK(cli({"parse", "--grammar", "x", "--new", "y", "--render", "diagonal"}).code == 2);
    CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("missing file exits 1 naming the path") {
    const Run r = cli({"parse", "--grammar", "/no/such/g.txt", "--new", kFix + "/parsing_new.txt"});
    CHECK(r.code == 1);
    CHECK(r.err.find("/no/such/g.txt") != std::string::npos);
}

TEST_CASE("parse prints scored alignments deterministically") {
    const std::vector<std::string> args{"parse", "--grammar", kFix + "/parsing_grammar.txt", "--new",
                                        kFix + "/parsing_new.txt", "--top", "2", "--probs"};
    const Run a = cli(args), b = cli(args);
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out.rfind("alignment 1 score_bits ", 0) == 0);
    CHECK(a.out.find("probability ") != std::string::npos);
    CHECK(a.out.find("alignment 3 ") == std::string::npos);
    const Run cols = cli({"parse", "--grammar", kFix + "/class_grammar.txt", "--new", kFix + "/class_new.txt",
                          "--render", "cols", "--top", "1"});
    CHECK(cols.code == 0);
    CHECK(cols.out.find("white-bib ---") != std::string::npos);
}

TEST_CASE("audit directory only when asked") {
    const auto dir = scratch("audit");
    std::filesystem::remove_all(dir);
    const std::vector<std::string> base{"parse", "--grammar", kFix + "/parsing_grammar.txt", "--new",
                                        kFix + "/parsing_new.txt"};
    CHECK(cli(base).code == 0);
    CHECK_FALSE(std::filesystem::exists(dir));
    auto with = base;
    with.insert(with.end(), {"--audit", dir.string()});
    CHECK(cli(with).code == 0);
    CHECK(std::filesystem::exists(dir / "manifest.txt"));
    const std::string first = read_file(dir / "stage_001.tsv");
    CHECK(cli(with).code == 0);
    CHECK(read_file(dir / "stage_001.tsv") == first);
    std::filesystem::remove_all(dir);
}

TEST_CASE("validate reports duplicates") {
    const auto dup = scratch("dup.txt");
    write_file(dup, "1 X | a | #X\n2 X | a | #X\n");
    const Run bad = cli({"validate", "--grammar", dup.string()});
    CHECK(bad.code == 1);
    CHECK(bad.out.find("duplicate") != std::string::npos);
    const Run good = cli({"validate", "--grammar", kFix + "/parsing_grammar.txt"});
    CHECK(good.code == 0);
    CHECK(good.out.find("ok, 8 patterns") != std::string::npos);
    write_file(dup, "x a b\n");
    CHECK(cli({"validate", "--grammar", dup.string()}).code == 1);
}

TEST_CASE("learn writes a grammar whose re-parse matches the totals") {
    const auto corpus = scratch("corpus.txt"), out = scratch("learned.txt");
    write_file(corpus, "a b c d\na b c d\na b c d\n");
    const Run r = cli({"learn", "--corpus", corpus.string(), "--passes", "1", "--grammar-beam", "2", "--out",
                       out.string()});
    REQUIRE(r.code == 0);
    CHECK(std::filesystem::exists(out.string() + ".provenance"));
    const Grammar g = parse_grammar(read_file(out));
    const Run stdout_run = cli({"learn", "--corpus", corpus.string(), "--passes", "1", "--grammar-beam", "2"});
    CHECK(stdout_run.out.find(serialize_grammar(g)) != std::string::npos);
    CHECK(r.out.find("total_bits ") != std::string::npos);
}

TEST_CASE("neural recognizes and traces") {
    const auto g = scratch("ng.txt"), in = scratch("ni.txt"), tr = scratch("trace.tsv");
    write_file(g, "1 X | a b c | #X\n");
    write_file(in, "a b c\nc b a\n");
    const Run r = cli({"neural", "--grammar", g.string(), "--input", in.string(), "--trace", tr.string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("input 1: a b c\n  recognized X peak_rate 30.000000 peak_step 1\n") != std::string::npos);
    CHECK(r.out.find("input 2: c b a\n  recognized none\n") != std::string::npos);
    CHECK(read_file(tr).rfind("step\tsymbol\tassembly\trate\n", 0) == 0);
    write_file(g, "1 a b c\n");
    CHECK(cli({"neural", "--grammar", g.string(), "--input", in.string()}).code == 1);
}

TEST_CASE("unknown bench suite is a usage error") {
    CHECK(cli({"bench", "--suite", "nothing"}).code == 2);
}
