#include "tracescope/error.hpp"
#include "tracescope/python/lexer.hpp"
#include "tracescope/python/parser.hpp"
#include "tracescope/python/unparse.hpp"
#include "tracescope/subprocess.hpp"

#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace tracescope;
namespace fs = std::filesystem;

namespace {

    std::string slurp(const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    process_result run_python(const fs::path& script, const fs::path& cwd) {
        process_options opt;
        opt.argv = {TS_PYTHON, script.filename().string()};
        opt.working_dir = cwd;
        opt.timeout = std::chrono::seconds(60);
        return run_process(opt);
    }

    std::vector<fs::path> corpus() {
        std::vector<fs::path> out;
        for (const auto& e : fs::directory_iterator(fs::path(TS_FIXTURE_DIR) / "corpus"))
            if (e.path().extension() == ".py") out.push_back(e.path());
        std::sort(out.begin(), out.end());
        return out;
    }

    std::string python_eval(const std::string& expr_text) {
        auto dir = fs::temp_directory_path() / "ts_frontend_eval";
        fs::create_directories(dir);
        std::ofstream(dir / "probe.py") << "a, b, c, d = 3, 5, 7, 2\nxs = [1, 2, 3]\nprint(repr(" << expr_text
                                        << "))\n";
        auto r = run_python(dir / "probe.py", dir);
        return r.out + "|" + std::to_string(r.exit_code);
    }

}  // namespace

TEST_CASE("tokenizer tracks indentation and brackets") {
    auto toks = python::tokenize("def f(a,\n      b):\n    return a\n");
    int indents = 0, dedents = 0, newlines = 0;
    for (const auto& t : toks) {
        if (t.kind == python::token_kind::indent) ++indents;
        if (t.kind == python::token_kind::dedent) ++dedents;
        if (t.kind == python::token_kind::newline) ++newlines;
    }
    CHECK(indents == 1);
    CHECK(dedents == 1);
    CHECK(newlines == 2);
}

TEST_CASE("parse errors carry positions") {
    try {
        python::parse_module("x = (1,\ny = 2\n");
        FAIL("expected a parse error");
    } catch (const error& e) {
        CHECK(e.code() == error_code::parse_error);
    }
    CHECK_THROWS_AS(python::parse_module("def f(:\n    pass\n"), error);
    CHECK_THROWS_AS(python::parse_module("if x\n    y\n"), error);
}

TEST_CASE("unparse respects precedence") {
    for (const char* text :
         {"a - (b - c)", "(a - b) - c", "a ** b ** c", "(a ** b) ** c", "-a ** b", "(-a) ** b", "not a == b",
          "(not a) == b", "a if b else c if d else a", "(a if b else c) if d else a", "a < b < c", "(a < b) < c",
          "a and (b or c)", "a or b and c", "xs[1:2]", "xs[::-1]", "[x * 2 for x in xs if x > 1]",
          "{x: x + 1 for x in xs}", "list(map(lambda q: q + 1, xs))", "(lambda q: q + 1)(a)", "a // b % c * d", "a // (b % c)",
          "~a & b | c ^ d", "a << (b >> d)", "f'{a}-{b!r:>4}'", "(1).bit_length()", "(a, b)[0]",
          "sum(x for x in xs)", "[*xs, *xs]", "{**{'k': 1}, 'j': 2}", "'a' 'b'", "a is not None",
          "b not in xs", "(yield_ := 3) + 1"}) {
        auto printed = python::unparse(python::parse_expression(text));
        INFO(std::string(text) << " -> " << printed);
        CHECK(python::unparse(python::parse_expression(printed)) == printed);
        CHECK(python_eval(printed) == python_eval(text));
    }
}

TEST_CASE("corpus round-trips through parse and unparse with identical behaviour") {
    auto files = corpus();
    REQUIRE(files.size() >= 15);
    auto work = fs::temp_directory_path() / "ts_frontend_roundtrip";
    fs::remove_all(work);
    fs::create_directories(work / "orig");
    fs::create_directories(work / "printed");
    for (const auto& f : files) {
        fs::copy_file(f, work / "orig" / f.filename(), fs::copy_options::overwrite_existing);
    }
    for (const auto& f : files) {
        INFO(f.filename().string());
        auto source = slurp(f);
        auto printed = python::unparse(python::parse_module(source));
        CHECK(python::unparse(python::parse_module(printed)) == printed);
        std::ofstream(work / "printed" / f.filename()) << printed;
        auto a = run_python(work / "orig" / f.filename(), work / "orig");
        auto b = run_python(work / "printed" / f.filename(), work / "printed");
        CHECK(a.exit_code == b.exit_code);
        CHECK(a.out == b.out);
    }
    fs::remove_all(work);
}
