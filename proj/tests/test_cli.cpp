#include "support/python_run.hpp"
#include "tracescope/store/trace_store.hpp"
#include "tracescope/subprocess.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <unistd.h>

using namespace tracescope;
namespace fs = std::filesystem;

namespace {

    struct workdir {
        fs::path path{fs::temp_directory_path() / ("tracescope-cli-test-" + std::to_string(::getpid()))};
        workdir() {
            fs::create_directories(path);
            fs::copy_file(testing::fixture("corpus/fib.py"), path / "fib.py", fs::copy_options::overwrite_existing);
        }
        ~workdir() { fs::remove_all(path); }
    };

    process_result cli(std::vector<std::string> args) {
        process_options o;
        o.argv = {TS_TRACE_BIN};
        o.argv.insert(o.argv.end(), args.begin(), args.end());
        o.timeout = std::chrono::seconds(60);
        return run_process(o);
    }

}  // namespace

TEST_CASE("trace subcommands") {
    workdir w;
    auto fib = (w.path / "fib.py").string();
    auto db = (w.path / "fib.db").string();

    auto run = cli({"run", fib, "--track", "val@fib", "--track-expr", "7:fib(n - 1) + fib(n - 2)", "--out", db});
    REQUIRE(run.exit_code == 0);
    CHECK(run.out == "13\n");
    CHECK(run.err.find("25 calls") != std::string::npos);

    auto names = cli({"names", db});
    CHECK(names.out == "val@fib\nfib(n - 1) + fib(n - 2)@fib\n");

    auto table = cli({"query", db, "--name", "val", "--filter", "min=5", "--filter", "max=13", "--filter",
                      "max_exclusive=true"});
    REQUIRE(table.exit_code == 0);
    auto store = store::trace_store::open(db);
    store::value_filter f;
    f.min = 5;
    f.max = 13;
    f.max_exclusive = true;
    auto rows = store.select_values("val", f);
    CHECK(rows.size() == 3);
    CHECK(static_cast<std::size_t>(std::count(table.out.begin(), table.out.end(), '\n')) == rows.size() + 1);

    auto json_rows = cli({"query", db, "--name", "val", "--format", "json"});
    auto parsed = nlohmann::json::parse(json_rows.out);
    CHECK(parsed.size() == 12);

    auto deps = cli({"deps", db, "--block", std::to_string(store.select_values("val").front().id)});
    REQUIRE(deps.exit_code == 0);
    CHECK(deps.out.find("variable: val@fib") != std::string::npos);
    CHECK(std::count(deps.out.begin(), deps.out.end(), '\n') == 5);

    auto plot = cli({"plot", db, "--query", R"({"names": ["val"]})"});
    REQUIRE(plot.exit_code == 0);
    CHECK(nlohmann::json::parse(plot.out)["kind"] == "histogram");

    auto shadow = cli({"instrument", fib, "--track", "val"});
    REQUIRE(shadow.exit_code == 0);
    CHECK(shadow.out.find("_tr_rt.value('val@fib'") != std::string::npos);

    auto missing = cli({"query", db, "--name", "nope"});
    CHECK(missing.exit_code == 2);
    CHECK(missing.err.find("UnknownName") != std::string::npos);
    auto bad_expr = cli({"run", fib, "--track-expr", "seven:x"});
    CHECK(bad_expr.exit_code == 2);
    CHECK(bad_expr.err.find("InvalidArgument") != std::string::npos);
    auto bad_target = cli({"run", fib, "--track", "ghost"});
    CHECK(bad_target.exit_code == 2);
    CHECK(bad_target.err.find("UnresolvableTarget") != std::string::npos);
    auto bad_filter = cli({"query", db, "--name", "val", "--filter", "colour=red"});
    CHECK(bad_filter.exit_code == 2);
    auto not_tracked = cli({"deps", db, "--block", "0"});
    CHECK(not_tracked.err.find("NotATrackedBlock") != std::string::npos);
    CHECK(cli({}).exit_code != 0);
}

TEST_CASE("trace run passes the subject's exit status through") {
    workdir w;
    std::ofstream(w.path / "exits.py") << "import sys\nprint('bye')\nsys.exit(3)\n";
    auto r = cli({"run", (w.path / "exits.py").string(), "--out", (w.path / "exits.db").string()});
    CHECK(r.exit_code == 3);
    CHECK(r.out == "bye\n");
    auto config = w.path / "config.json";
    std::ofstream(config) << R"({"timeout_ms": 800})";
    std::ofstream(w.path / "spin.py") << "while True:\n    pass\n";
    auto t = cli({"--config", config.string(), "run", (w.path / "spin.py").string(), "--out",
                  (w.path / "spin.db").string()});
    CHECK(t.exit_code == 124);
    CHECK(t.err.find("timed out") != std::string::npos);
    CHECK(store::trace_store::open(w.path / "spin.db").aborted());
}
