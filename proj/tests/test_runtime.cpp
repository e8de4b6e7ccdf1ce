#include "support/python_run.hpp"
#include "support/track_all.hpp"
#include "tracescope/error.hpp"
#include "tracescope/instrument/scopes.hpp"
#include "tracescope/python/parser.hpp"

#include <doctest.h>

#include <filesystem>
#include <map>

using namespace tracescope;
using namespace tracescope::service;
using tracescope::testing::fixture;
using tracescope::testing::single_file;
using tracescope::testing::slurp;
using tracescope::testing::test_config;
using tracescope::testing::track_everything;

namespace {

    std::vector<const block_record*> of_type(const trace& t, block_type type) {
        std::vector<const block_record*> out;
        for (const auto& b : t.blocks)
            if (b.type == type) out.push_back(&b);
        return out;
    }

    run_result traced(const std::string& src, const trace_spec& spec = {}) {
        return run_traced(single_file(src), spec, test_config());
    }

}  // namespace

TEST_CASE("instrumented corpus programs behave like the originals") {
    int programs = 0;
    for (const auto& entry : std::filesystem::directory_iterator(fixture("corpus"))) {
        if (entry.path().extension() != ".py") continue;
        auto src = slurp(entry.path());
        auto bundle = single_file(src, entry.path().filename().string());
        auto plain = run_plain(bundle, test_config());
        for (const auto& spec : {trace_spec{}, track_everything(src)}) {
            auto run = run_traced(bundle, spec, test_config());
            INFO(entry.path().filename().string(), " targets=", spec.targets.size());
            CHECK(run.out == plain.out);
            CHECK(run.exit_code == plain.exit_code);
            CHECK(run.result.aborted == run.uncaught.has_value());
            CHECK_NOTHROW(check_trace_invariants(run.result));
        }
        ++programs;
    }
    CHECK(programs >= 20);
}

TEST_CASE("fib records one call block per invocation") {
    auto src = slurp(fixture("corpus/fib.py"));
    trace_spec spec;
    spec.targets.push_back({"val", target_kind::variable, "", {}});
    auto run = run_traced(single_file(src, "fib.py"), spec, test_config());
    CHECK(run.out == "13\n");
    auto calls = of_type(run.result, block_type::call);
    CHECK(calls.size() == 25);
    // val is assigned once per invocation with n > 2: c(7) minus the leaf calls.
    auto records = of_type(run.result, block_type::tracked);
    CHECK(records.size() == 12);
    for (const auto* r : records) CHECK(run.result.at(*r->parent).name == "fib");
    CHECK(run.result.statics.function_spans.at("fib").start_line == 4);
}

TEST_CASE("argument calls are earlier siblings of the call they feed") {
    auto run = traced(slurp(fixture("corpus/call_order.py")));
    std::vector<std::string> top;
    for (auto c : run.result.root().children) top.push_back(run.result.at(c).name);
    REQUIRE(top.size() >= 3);
    CHECK(std::vector<std::string>(top.begin(), top.begin() + 3) == std::vector<std::string>{"h", "g", "f"});
}

TEST_CASE("loop blocks mirror iterations") {
    const std::string src =
            "for i in range(0):\n    pass\n"
            "for i in range(3):\n    x = i * 2\n"
            "n = 0\nwhile n < 4:\n    n += 1\n"
            "for a in range(2):\n    for b in range(3):\n        y = a + b\n";
    trace_spec spec;
    for (const char* n : {"x", "y"}) spec.targets.push_back({n, target_kind::variable, "<module>", {}});
    auto run = traced(src, spec);
    auto loops = of_type(run.result, block_type::loop);
    REQUIRE(loops.size() == 6);
    std::vector<std::size_t> counts;
    for (const auto* l : loops) counts.push_back(l->children.size());
    CHECK(counts == std::vector<std::size_t>{0, 3, 4, 2, 3, 3});
    for (const auto* r : of_type(run.result, block_type::tracked)) {
        if (r->name == "x@<module>") CHECK(r->val->i == 2 * *r->iteration);
    }
}

TEST_CASE("a tracked expression with a side effect runs once") {
    const std::string src =
            "hits = []\n"
            "def bump(v):\n    hits.append(v)\n    return v\n"
            "total = bump(3) + 4\n"
            "print(len(hits), total)\n";
    trace_spec spec;
    spec.targets.push_back({"bump(3) + 4", target_kind::expression, "", {"", 5, 5, 0, 0}});
    auto run = traced(src, spec);
    CHECK(run.out == "1 7\n");
    auto records = of_type(run.result, block_type::tracked);
    REQUIRE(records.size() == 1);
    CHECK(records[0]->val == value::integer(7));
    CHECK_FALSE(records[0]->is_variable);
}

TEST_CASE("special values survive the trip from Python") {
    const std::string src =
            "import math\n"
            "a = float('nan')\nb = -math.inf\nc = 'tab\\there'\nd = [1, 2]\ne = None\nf = True\ng = 2 ** 70\n";
    trace_spec spec;
    for (const char* n : {"a", "b", "c", "d", "e", "f", "g"}) spec.targets.push_back({n, target_kind::variable, "", {}});
    auto run = traced(src, spec);
    auto r = of_type(run.result, block_type::tracked);
    REQUIRE(r.size() == 7);
    CHECK(r[0]->val->is_nan());
    CHECK((r[1]->val->kind == value_kind::real && r[1]->val->d < 0 && std::isinf(r[1]->val->d)));
    CHECK(r[2]->val == value::string("tab\there"));
    CHECK(r[3]->val->kind == value_kind::opaque);
    CHECK(r[4]->val->kind == value_kind::none);
    CHECK(r[5]->val == value::boolean(true));
    CHECK(r[6]->val->kind == value_kind::opaque);
}

TEST_CASE("custom expressions are evaluated next to their anchor") {
    const std::string src = "xs = [4, 1, 9]\nfor k in range(2):\n    top = max(xs) + k\n";
    trace_spec spec;
    spec.targets.push_back({"top", target_kind::variable, "", {}});
    spec.customs.push_back({"spread", "top - min(xs)", {"top", target_kind::variable, "<module>", {}}});
    spec.customs.push_back({"boom", "xs[10]", {"top", target_kind::variable, "<module>", {}}});
    auto run = traced(src, spec);
    REQUIRE(run.result.customs.size() == 4);
    CHECK(run.result.customs[0].val == value::integer(8));
    CHECK(run.result.customs[1].val.kind == value_kind::opaque);
    CHECK(run.result.customs[2].val == value::integer(9));
    CHECK(run.exit_code == 0);
}

TEST_CASE("uncaught exceptions leave an aborted but usable trace") {
    auto run = traced("def f():\n    raise ValueError('x')\nf()\n");
    CHECK(run.exit_code == 1);
    CHECK(run.uncaught == "ValueError");
    CHECK(run.result.aborted);
    auto calls = of_type(run.result, block_type::call);
    REQUIRE(calls.size() == 2);
    CHECK(calls[0]->name == "f");
    CHECK(calls[0]->aborted);
    CHECK(calls[1]->name == "ValueError");
    CHECK_FALSE(calls[1]->aborted);
}

TEST_CASE("timeouts keep the partial trace") {
    auto config = test_config();
    config.timeout = std::chrono::milliseconds(1500);
    auto run = run_traced(single_file("def tick():\n    return 1\nwhile True:\n    tick()\n"), {}, config);
    CHECK(run.timed_out);
    CHECK(run.result.aborted);
    CHECK(of_type(run.result, block_type::call).size() > 0);
}

TEST_CASE("the event cap stops recording") {
    auto config = test_config();
    config.event_cap = 100;
    try {
        run_traced(single_file("def f():\n    return 1\nfor i in range(1000):\n    f()\n"), {}, config);
        FAIL("expected TraceTooLarge");
    } catch (const error& e) {
        CHECK(e.code() == error_code::trace_too_large);
    }
}

TEST_CASE("a killed subject without events is a crash") {
    try {
        traced("import os, signal\nos.kill(os.getpid(), signal.SIGKILL)\n");
        FAIL("expected SubjectCrash");
    } catch (const error& e) {
        CHECK(e.code() == error_code::subject_crash);
    }
}

TEST_CASE("threads are rejected") {
    const std::string src =
            "import threading\n"
            "def work():\n    v = 1\n    return v\n"
            "t = threading.Thread(target=work)\nt.start()\nt.join()\n";
    trace_spec spec;
    spec.targets.push_back({"v", target_kind::variable, "", {}});
    try {
        traced(src, spec);
        FAIL("expected ThreadViolation");
    } catch (const error& e) {
        CHECK(e.code() == error_code::thread_violation);
    }
}

TEST_CASE("multi-file bundles run from a shadow directory") {
    source_bundle b;
    b.entry = "main.py";
    b.files["main.py"] = "from helper import twice\nx = twice(4)\nprint(x)\n";
    b.files["helper.py"] = "def twice(v):\n    return v * 2\n";
    trace_spec spec;
    spec.targets.push_back({"x", target_kind::variable, "", {}});
    auto run = run_traced(b, spec, test_config());
    CHECK(run.out == "8\n");
    CHECK(of_type(run.result, block_type::call).size() == 1);
    b.files["../escape.py"] = "";
    CHECK_THROWS_AS(run_traced(b, spec, test_config()), error);
}
