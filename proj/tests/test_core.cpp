#include "support/trace_dump.hpp"
#include "support/trace_gen.hpp"
#include "tracescope/error.hpp"
#include "tracescope/static_info.hpp"
#include "tracescope/trace_io.hpp"
#include "tracescope/trace_spec.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <nlohmann/json.hpp>
#include <sstream>

using namespace tracescope;
using tracescope::testing::dump;
using tracescope::testing::render_value;

namespace {

    error_code code_of(auto&& fn) {
        try {
            fn();
        } catch (const error& e) {
            return e.code();
        }
        return error_code::io_error;
    }

}  // namespace

TEST_CASE("value sentinels round-trip through json") {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double inf = std::numeric_limits<double>::infinity();
    for (const auto& v : {value::real(nan), value::real(inf), value::real(-inf), value::real(-0.0), value::integer(-7),
                          value::boolean(true), value::none(), value::string("plain"), value::string("\x1fnan"),
                          value::string("\x1f\x1fx"), value::opaque("<object at 0x1>")}) {
        auto back = value_from_json(nlohmann::ordered_json::parse(value_to_json(v).dump()));
        CHECK(render_value(back) == render_value(v));
    }
    CHECK(value_to_json(value::real(nan)) == std::string(sentinel_nan));
    CHECK(value::real(nan) == value::real(nan));
    CHECK_FALSE(value::real(1.0) == value::integer(1));
}

TEST_CASE("opaque renderings are capped") {
    auto v = value::opaque(std::string(1000, 'a'));
    CHECK(v.s.size() == opaque_render_cap);
}

TEST_CASE("empty trace serialization is byte-stable") {
    auto t = make_empty_trace();
    auto once = serialize_trace(t);
    auto twice = serialize_trace(deserialize_trace(once));
    CHECK(once == twice);
    CHECK(nlohmann::json::parse(once)["format_version"] == trace_format_version);
}

TEST_CASE("random traces round-trip structurally") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        testing::gen_options opt;
        opt.blocks = 500;
        auto t = testing::random_trace(seed, opt);
        REQUIRE(t.blocks.size() == 500);
        REQUIRE_NOTHROW(check_trace_invariants(t));
        auto bytes = serialize_trace(t);
        auto back = deserialize_trace(bytes);
        CHECK(dump(back) == dump(t));
        CHECK(serialize_trace(back) == bytes);
    }
}

TEST_CASE("trace files round-trip") {
    auto t = testing::random_trace(99);
    t.aborted = true;
    auto path = std::filesystem::temp_directory_path() / "ts_core_roundtrip.json";
    write_trace_file(t, path);
    CHECK(dump(read_trace_file(path)) == dump(t));
    std::filesystem::remove(path);
}

TEST_CASE("invariant violations are rejected") {
    auto base = testing::random_trace(5, {.blocks = 60, .customs = 2});
    REQUIRE_NOTHROW(check_trace_invariants(base));

    SUBCASE("timestamp not younger than parent") {
        auto t = base;
        t.blocks[1].ts = 0;
        CHECK(code_of([&] { check_trace_invariants(t); }) == error_code::malformed_trace);
    }
    SUBCASE("tracked block with a child") {
        auto t = base;
        for (auto& b : t.blocks) {
            if (b.type != block_type::tracked) continue;
            block_record extra;
            extra.id = static_cast<block_id>(t.blocks.size());
            extra.type = block_type::call;
            extra.parent = b.id;
            extra.ts = 100000;
            b.children.push_back(extra.id);
            t.blocks.push_back(extra);
            break;
        }
        CHECK(code_of([&] { check_trace_invariants(t); }) == error_code::malformed_trace);
    }
    SUBCASE("record name outside the spec") {
        auto t = base;
        for (auto& b : t.blocks)
            if (b.type == block_type::tracked) {
                b.name = "ghost@<module>";
                break;
            }
        CHECK(code_of([&] { check_trace_invariants(t); }) == error_code::malformed_trace);
    }
    SUBCASE("unknown format version") {
        auto j = nlohmann::json::parse(serialize_trace(base));
        j["format_version"] = 999;
        CHECK(code_of([&] { deserialize_trace(j.dump()); }) == error_code::malformed_trace);
    }
    SUBCASE("garbage bytes") {
        CHECK(code_of([&] { deserialize_trace("{not json"); }) == error_code::malformed_trace);
    }
}

TEST_CASE("spec json round-trip") {
    trace_spec s;
    s.targets.push_back({"loss", target_kind::variable, "train", {"main.py", 3, 9, 0, 0}});
    s.targets.push_back({"x * 2", target_kind::expression, "<module>", {"main.py", 12, 12, 4, 9}});
    s.customs.push_back({"ratio", "a / b", {"a", target_kind::variable, "<module>", {"main.py", 12, 12, 0, 0}}});
    s.exclusions = {"torch"};
    auto back = spec_from_json(spec_to_json(s));
    CHECK(spec_to_json(back).dump() == spec_to_json(s).dump());
    auto has = [](const std::vector<std::string>& v, const std::string& n) {
        return std::find(v.begin(), v.end(), n) != v.end();
    };
    auto eff = effective_exclusions(s);
    for (auto name : {"math", "numpy", "print", "len", "torch"}) CHECK(has(eff, name));
    s.override_default_exclusions = true;
    CHECK_FALSE(has(effective_exclusions(s), "math"));
}

TEST_CASE("qualified names") {
    auto q = qualified_name::parse("x@C.m");
    CHECK(q.name == "x");
    CHECK(q.scope == "C.m");
    CHECK(q.str() == "x@C.m");
}

TEST_CASE("error codes have stable names") {
    CHECK(to_string(error_code::unresolvable_target) == "UnresolvableTarget");
    CHECK(to_string(error_code::trace_too_large) == "TraceTooLarge");
}
