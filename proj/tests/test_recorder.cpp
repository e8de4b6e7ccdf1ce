#include "support/trace_gen.hpp"
#include "tracescope/error.hpp"
#include "tracescope/recorder/event_log.hpp"
#include "tracescope/recorder/recorder.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <thread>

using namespace tracescope;

namespace {

    trace_spec spec_with(std::initializer_list<std::pair<const char*, const char*>> vars) {
        trace_spec s;
        for (const auto& [n, sc] : vars) s.targets.push_back({n, target_kind::variable, sc, {}});
        return s;
    }

    error_code code_of(const std::function<void()>& fn) {
        try {
            fn();
        } catch (const error& e) {
            return e.code();
        }
        FAIL("no error thrown");
        return error_code::io_error;
    }

}  // namespace

TEST_CASE("a leaf call becomes one child of the root") {
    recorder r;
    auto id = r.enter_call("f", 3);
    r.exit_call(id);
    auto t = r.finalize();
    REQUIRE(t.blocks.size() == 2);
    CHECK(t.root().children == std::vector<block_id>{1});
    CHECK(t.at(1).type == block_type::call);
    CHECK(t.at(1).name == "f");
    CHECK(t.at(1).children.empty());
    CHECK_FALSE(t.aborted);
    check_trace_invariants(t);
}

TEST_CASE("recursive calls nest like the call tree") {
    // Oracle: block count of fib(n) satisfies c(n) = 1 + c(n-1) + c(n-2), c(1) = c(2) = 1.
    recorder r;
    std::function<int(int)> fib = [&](int n) {
        auto id = r.enter_call("fib", 1);
        int v = n <= 2 ? 1 : fib(n - 1) + fib(n - 2);
        r.exit_call(id);
        return v;
    };
    fib(7);
    auto t = r.finalize();
    std::function<int(int)> calls = [&](int n) { return n <= 2 ? 1 : 1 + calls(n - 1) + calls(n - 2); };
    CHECK(static_cast<int>(t.blocks.size()) - 1 == calls(7));
    CHECK(calls(7) == 25);
    check_trace_invariants(t);
}

TEST_CASE("argument calls precede the outer call as siblings") {
    recorder r;
    for (const char* n : {"h", "g", "f"}) r.exit_call(r.enter_call(n, 1));
    auto t = r.finalize();
    REQUIRE(t.root().children.size() == 3);
    CHECK(t.at(1).name == "h");
    CHECK(t.at(2).name == "g");
    CHECK(t.at(3).name == "f");
    CHECK(t.at(1).ts < t.at(2).ts);
    CHECK(t.at(2).ts < t.at(3).ts);
}

TEST_CASE("loops hold consecutive iterations") {
    recorder r(spec_with({{"x", "<module>"}}));
    auto empty = r.begin_loop(1, "1:0");
    r.end_loop(empty);
    auto loop = r.begin_loop(2, "2:0");
    for (int i = 0; i < 3; ++i) {
        CHECK(r.begin_iteration(loop) == i);
        r.record_value("x@<module>", value::integer(i), 3, true);
    }
    r.end_loop(loop);
    auto t = r.finalize();
    CHECK(t.at(empty).type == block_type::loop);
    CHECK(t.at(empty).children.empty());
    REQUIRE(t.at(loop).children.size() == 3);
    for (int i = 0; i < 3; ++i) {
        const auto& it = t.at(t.at(loop).children[static_cast<std::size_t>(i)]);
        CHECK(it.type == block_type::iteration);
        CHECK(it.iteration == i);
        REQUIRE(it.children.size() == 1);
        const auto& rec = t.at(it.children[0]);
        CHECK(rec.iteration == i);
        CHECK(rec.val == value::integer(i));
    }
    check_trace_invariants(t);
}

TEST_CASE("nested loops index iterations per loop") {
    recorder r(spec_with({{"v", "<module>"}}));
    auto outer = r.begin_loop(1, "1:0");
    for (int i = 0; i < 2; ++i) {
        r.begin_iteration(outer);
        auto inner = r.begin_loop(2, "2:4");
        for (int j = 0; j < 3; ++j) {
            r.begin_iteration(inner);
            r.record_value("v@<module>", value::integer(i * 10 + j), 3, true);
        }
        r.end_loop(inner);
    }
    r.end_loop(outer);
    auto t = r.finalize();
    check_trace_invariants(t);
    int records = 0;
    for (const auto& b : t.blocks) {
        if (b.type != block_type::tracked) continue;
        ++records;
        CHECK(b.iteration == b.val->i % 10);
    }
    CHECK(records == 6);
}

TEST_CASE("values keep their exact content") {
    recorder r(spec_with({{"x", "<module>"}}));
    r.record_value("x@<module>", value::real(std::nan("")), 1, true);
    r.record_value("x@<module>", value::real(-INFINITY), 1, true);
    r.record_value("x@<module>", value::string("s"), 1, true);
    auto t = r.finalize();
    CHECK(t.at(1).val->is_nan());
    CHECK(std::isinf(t.at(2).val->d));
    CHECK(t.at(3).val == value::string("s"));
}

TEST_CASE("records get unique ids") {
    recorder r(spec_with({{"x", "<module>"}}));
    std::set<block_id> ids;
    for (int i = 0; i < 1000; ++i) ids.insert(r.record_value("x@<module>", value::integer(i), 1, true));
    CHECK(ids.size() == 1000);
}

TEST_CASE("closing a block that is not innermost is a stack mismatch") {
    recorder r;
    auto outer = r.enter_call("f", 1);
    r.enter_call("g", 2);
    CHECK(code_of([&] { r.exit_call(outer); }) == error_code::stack_mismatch);
    recorder r2;
    auto loop = r2.begin_loop(1, "1:0");
    r2.enter_call("g", 2);
    CHECK(code_of([&] { r2.begin_iteration(loop); }) == error_code::stack_mismatch);
}

TEST_CASE("abort unwinds and marks blocks aborted") {
    recorder r;
    auto f = r.enter_call("f", 1);
    auto loop = r.begin_loop(2, "2:0");
    r.begin_iteration(loop);
    auto g = r.enter_call("g", 3);
    r.abort(f);
    r.end_loop(loop);
    r.abort(f);
    auto t = r.finalize();
    for (auto id : {f, loop, g}) CHECK(t.at(id).aborted);
    CHECK(r.open_blocks().size() == 1);
    check_trace_invariants(t);
}

TEST_CASE("finalize closes open blocks and marks the trace aborted") {
    recorder r;
    r.enter_call("f", 1);
    auto t = r.finalize();
    CHECK(t.aborted);
    CHECK(t.at(1).aborted);
}

TEST_CASE("use from another thread is a thread violation") {
    recorder r;
    error_code seen = error_code::io_error;
    std::thread th([&] {
        try {
            r.enter_call("f", 1);
        } catch (const error& e) {
            seen = e.code();
        }
    });
    th.join();
    CHECK(seen == error_code::thread_violation);
}

TEST_CASE("the event cap bounds the trace size") {
    recorder r({}, {.event_cap = 10});
    for (int i = 0; i < 5; ++i) r.exit_call(r.enter_call("f", 1));
    CHECK(code_of([&] { r.enter_call("f", 1); }) == error_code::trace_too_large);
}

TEST_CASE("random event streams always produce valid traces") {
    std::mt19937 rng(3);
    auto spec = spec_with({{"x", "<module>"}, {"y", "f"}});
    for (int round = 0; round < 30; ++round) {
        recorder r(spec);
        std::vector<std::pair<block_id, bool>> open;  // id, is_loop
        for (int step = 0; step < 400; ++step) {
            switch (rng() % 7) {
                case 0: open.emplace_back(r.enter_call("f", 1), false); break;
                case 1: open.emplace_back(r.begin_loop(2, "2:0"), true); break;
                case 2:
                    if (!open.empty() && open.back().second) r.begin_iteration(open.back().first);
                    break;
                case 3:
                    if (!open.empty()) {
                        auto [id, is_loop] = open.back();
                        open.pop_back();
                        is_loop ? r.end_loop(id) : r.exit_call(id);
                    }
                    break;
                case 4:
                    if (!open.empty() && rng() % 4 == 0) {
                        auto k = rng() % open.size();
                        r.abort(open[k].first);
                        open.resize(k);
                    }
                    break;
                case 5: r.record_value(rng() % 2 ? "x@<module>" : "y@f", value::integer(step), 4, true); break;
                default: r.record_custom("c", value::real(step * 0.5), 5); break;
            }
        }
        auto t = r.finalize();
        CHECK_NOTHROW(check_trace_invariants(t));
    }
}

TEST_CASE("event log replay") {
    std::vector<std::string> lines{"def f():", "    return 1", "x = f()"};
    auto spec = spec_with({{"x", "<module>"}});
    const std::string log =
            "C\t1\t3\t\"f\"\nX\t1\nV\t3\t1\t\"x@<module>\"\ti\t1\nV\t3\t1\t\"x@<module>\"\tf\tnan\n"
            "U\t3\t\"c\"\ts\t\"hi\"\nF\nV\t3\t1\t\"x@<mod";
    auto out = replay_event_log(log, spec, lines);
    CHECK(out.finished);
    CHECK_FALSE(out.result.aborted);
    REQUIRE(out.result.blocks.size() == 4);
    CHECK(out.result.at(1).label == "x = f()");
    CHECK(out.result.at(2).val == value::integer(1));
    CHECK(out.result.at(3).val->is_nan());
    REQUIRE(out.result.customs.size() == 1);
    CHECK(out.result.customs[0].val == value::string("hi"));

    auto crashed = replay_event_log("C\t1\t3\t\"f\"\nE\t\"ValueError\"\n", spec, lines);
    CHECK(crashed.result.aborted);
    CHECK(crashed.uncaught == "ValueError");

    CHECK_THROWS_AS(replay_event_log("C\t1\t3\t\"f\"\nO\n", spec, lines), error);
    auto tolerated = replay_event_log("C\t1\t3\t\"f\"\nO\n", spec, lines, {}, true);
    CHECK(tolerated.overflowed);
    CHECK(tolerated.result.aborted);
    CHECK(code_of([&] { replay_event_log("Q\tzz\n", spec, lines); }) == error_code::malformed_trace);
    CHECK(code_of([&] { replay_event_log("T\n", spec, lines); }) == error_code::thread_violation);
}
