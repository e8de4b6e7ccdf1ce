// Runs every primary acceptance criterion and prints one PASS/FAIL line each.
// Exit status is the number of failed criteria.

#include "support/deps_oracle.hpp"
#include "support/program_gen.hpp"
#include "support/python_run.hpp"
#include "support/trace_gen.hpp"
#include "support/track_all.hpp"
#include "tracescope/deps/dependency.hpp"
#include "tracescope/error.hpp"
#include "tracescope/store/plot.hpp"
#include "tracescope/store/trace_store.hpp"
#include "tracescope/subprocess.hpp"
#include "tracescope/trace_io.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include <unistd.h>

using namespace tracescope;
namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

namespace {

    // Pinned limits.
    constexpr double preservation_budget_s = 60.0;
    constexpr std::size_t min_corpus_programs = 15;
    constexpr double gd_budget_s = 10.0;
    constexpr double gd_minimum = 3.0;
    constexpr double gd_tolerance = 1e-6;
    constexpr int dependency_programs = 100;
    constexpr int store_cases = 1000;
    constexpr std::size_t store_max_blocks = 10000;
    constexpr double store_budget_s = 60.0;

    struct failure : std::runtime_error {
        using std::runtime_error::runtime_error;
    };

    void expect(bool ok, const std::string& what) {
        if (!ok) throw failure(what);
    }

    double seconds_since(clock_type::time_point t0) {
        return std::chrono::duration<double>(clock_type::now() - t0).count();
    }

    int failures = 0;

    void criterion(const std::string& name, const std::function<std::string()>& body) {
        auto t0 = clock_type::now();
        try {
            auto detail = body();
            std::cout << "PASS " << name << ": " << detail << " [" << seconds_since(t0) << " s]" << std::endl;
        } catch (const std::exception& e) {
            ++failures;
            std::cout << "FAIL " << name << ": " << e.what() << " [" << seconds_since(t0) << " s]" << std::endl;
        }
    }

    std::string corpus_file(const std::string& name) { return testing::slurp(testing::fixture("corpus/" + name)); }

    std::vector<fs::path> corpus() {
        std::vector<fs::path> out;
        for (const auto& e : fs::directory_iterator(testing::fixture("corpus")))
            if (e.path().extension() == ".py") out.push_back(e.path());
        std::sort(out.begin(), out.end());
        return out;
    }

    trace_spec track_one(const std::string& text) {
        trace_spec s;
        auto at = text.find('@');
        s.targets.push_back({text.substr(0, at), target_kind::variable,
                             at == std::string::npos ? "" : text.substr(at + 1), {}});
        return s;
    }

    std::string last_line(const std::string& text) {
        auto trimmed = text.substr(0, text.find_last_not_of('\n') + 1);
        auto nl = trimmed.rfind('\n');
        return nl == std::string::npos ? trimmed : trimmed.substr(nl + 1);
    }

    bool same_double(double a, double b) {
        if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
        return a == b;
    }

    // Semantic preservation over the whole corpus with every variable tracked.
    std::string semantic_preservation() {
        auto t0 = clock_type::now();
        auto files = corpus();
        expect(files.size() >= min_corpus_programs, "corpus has only " + std::to_string(files.size()) + " programs");
        std::set<std::string> features;
        for (const auto& f : files) {
            auto src = testing::slurp(f);
            if (src.find("for ") != std::string::npos || src.find("while ") != std::string::npos) features.insert("loops");
            if (src.find(" for ") != std::string::npos && src.find('[') != std::string::npos) features.insert("comprehensions");
            auto bundle = testing::single_file(src, f.filename().string());
            auto plain = service::run_plain(bundle, testing::test_config());
            for (bool everything : {false, true}) {
                auto spec = everything ? testing::track_everything(src) : trace_spec{};
                auto traced = service::run_traced(bundle, spec, testing::test_config());
                expect(traced.out == plain.out, f.filename().string() + ": stdout differs");
                expect(traced.exit_code == plain.exit_code, f.filename().string() + ": exit status differs");
                check_trace_invariants(traced.result);
                if (everything) {
                    std::map<block_id, int> depth;
                    for (const auto& b : traced.result.blocks)
                        if (b.parent) depth[b.id] = depth[*b.parent] + 1;
                    for (const auto& b : traced.result.blocks)
                        if (b.type == block_type::call && b.parent && traced.result.at(*b.parent).type == block_type::call &&
                            traced.result.at(*b.parent).name == b.name)
                            features.insert("recursion");
                    for (const auto& b : traced.result.blocks)
                        if (b.type == block_type::call && depth[b.id] >= 2) features.insert("nested calls");
                }
            }
        }
        for (const char* f : {"loops", "recursion", "comprehensions", "nested calls"})
            expect(features.contains(f), std::string("corpus lacks ") + f);
        double elapsed = seconds_since(t0);
        expect(elapsed < preservation_budget_s, "took " + std::to_string(elapsed) + " s");
        return std::to_string(files.size()) + " programs, stdout and exit status identical under empty and full specs";
    }

    std::string fib_structure() {
        auto src = corpus_file("fib.py");
        // Oracle: count invocations with a wrapper the recursion also goes through.
        auto counted = src +
                       "_calls = [0, 0]\n_inner = fib\n\n\ndef fib(n):\n    _calls[0] += 1\n"
                       "    if n > 2:\n        _calls[1] += 1\n    return _inner(n)\n\n\nfib(7)\n"
                       "print(_calls[0], _calls[1])\n";
        auto oracle = testing::run_source(counted);
        std::istringstream in(last_line(oracle.out));
        std::size_t calls = 0, assignments = 0;
        in >> calls >> assignments;
        expect(calls == 25, "oracle counted " + std::to_string(calls) + " calls");

        auto run = service::run_traced(testing::single_file(src, "fib.py"), track_one("val"),
                                       testing::test_config());
        std::size_t call_blocks = 0, records = 0;
        for (const auto& b : run.result.blocks) {
            if (b.type == block_type::call) {
                expect(b.name == "fib", "unexpected call block " + b.name);
                ++call_blocks;
            }
            if (b.type == block_type::tracked) {
                ++records;
                expect(run.result.at(*b.parent).type == block_type::call, "val recorded outside a fib call");
            }
        }
        expect(call_blocks == calls, std::to_string(call_blocks) + " call blocks, oracle " + std::to_string(calls));
        expect(records == assignments,
               std::to_string(records) + " val records, oracle " + std::to_string(assignments));

        auto dir = fs::temp_directory_path() / ("tracescope-accept-" + std::to_string(::getpid()));
        fs::create_directories(dir);
        write_trace_file(run.result, dir / "fib.trace.json");
        auto hierarchical = read_trace_file(dir / "fib.trace.json");
        auto rebuilt = store::trace_store::ingest(run.result, dir / "fib.db").reconstruct();
        fs::remove_all(dir);
        expect(rebuilt == hierarchical, "reconstruction from parent ids differs from the hierarchical file");
        return std::to_string(call_blocks) + " call blocks, " + std::to_string(records) +
               " val records, reconstruction equal";
    }

    std::string call_order() {
        auto src = corpus_file("call_order.py");
        auto plain = testing::run_source(src);
        auto effects = last_line(plain.out);
        auto run = service::run_traced(testing::single_file(src), {}, testing::test_config());
        std::vector<std::string> order;
        for (auto c : run.result.root().children)
            if (run.result.at(c).type == block_type::call && std::string("fgh").find(run.result.at(c).name) != std::string::npos)
                order.push_back(run.result.at(c).name);
        std::string joined;
        for (const auto& n : order) joined += (joined.empty() ? "" : ",") + n;
        expect(joined == effects, "trace order " + joined + ", effect log " + effects);
        expect(joined == "h,g,f", "order is " + joined);
        return "trace order " + joined + " equals the effect log";
    }

    std::vector<double> simulate_descent(double x, double rate, int steps) {
        std::vector<double> xs{x};
        for (int k = 0; k < steps; ++k) {
            double g = 2.0 * (x - 3.0);
            x = x - rate * g;
            xs.push_back(x);
        }
        return xs;
    }

    std::string gradient_descent() {
        auto t0 = clock_type::now();
        auto diverge = service::run_traced(testing::single_file(corpus_file("gd_diverge.py")), track_one("x@descend"),
                                           testing::test_config());
        auto st = store::trace_store::ingest(diverge.result);
        auto xs = st.select_values("x");
        auto expected = simulate_descent(0.5, 1.5, 1200);
        expect(xs.size() == expected.size(),
               std::to_string(xs.size()) + " x records, simulation has " + std::to_string(expected.size()));
        for (std::size_t i = 0; i < xs.size(); ++i) {
            expect(xs[i].val.is_numeric(), "x record " + std::to_string(i) + " is not numeric");
            expect(same_double(xs[i].val.as_double(), expected[i]), "x record " + std::to_string(i) + " differs");
        }
        std::size_t first_bad = xs.size();
        while (first_bad > 0 && !std::isfinite(xs[first_bad - 1].val.as_double())) --first_bad;
        expect(first_bad < xs.size(), "no inf/NaN suffix");
        for (std::size_t i = 0; i < first_bad; ++i)
            expect(std::isfinite(xs[i].val.as_double()), "non-finite value before the suffix");
        expect(std::isnan(xs.back().val.as_double()), "the last value is not NaN");
        std::size_t infs = 0;
        for (std::size_t i = first_bad; i < xs.size(); ++i) infs += std::isinf(xs[i].val.as_double()) ? 1 : 0;
        expect(infs >= 1, "the suffix never passes through infinity");
        // Sign-alternating growth around the minimum before the suffix.
        for (std::size_t i = 1; i < first_bad; ++i) {
            double prev = xs[i - 1].val.as_double() - gd_minimum, cur = xs[i].val.as_double() - gd_minimum;
            expect(prev * cur < 0, "deviation does not alternate at record " + std::to_string(i));
            expect(std::abs(cur) > std::abs(prev), "deviation does not grow at record " + std::to_string(i));
        }

        auto converge = service::run_traced(testing::single_file(corpus_file("gd_converge.py")), track_one("x@descend"),
                                            testing::test_config());
        auto cs = store::trace_store::ingest(converge.result).select_values("x");
        expect(!cs.empty(), "no x records with the lowered rate");
        double final_x = cs.back().val.as_double();
        expect(std::abs(final_x - gd_minimum) <= gd_tolerance, "final x " + std::to_string(final_x));
        double elapsed = seconds_since(t0);
        expect(elapsed < gd_budget_s, "took " + std::to_string(elapsed) + " s");
        std::ostringstream msg;
        msg << first_bad << " finite alternating values then " << xs.size() - first_bad
            << " inf/NaN, matches simulation; lowered rate ends at " << final_x;
        return msg.str();
    }

    std::string dependency_equivalence() {
        std::size_t checked = 0;
        for (int seed = 1; seed <= dependency_programs; ++seed) {
            auto prog = testing::random_program(static_cast<std::uint64_t>(seed) * 7919);
            expect(prog.statements <= 30, "program has more than 30 statements");
            auto run = service::run_traced(testing::single_file(prog.source), testing::track_everything(prog.source),
                                           testing::test_config());
            expect(run.exit_code == 0, "program " + std::to_string(seed) + " failed: " + run.err);
            auto st = store::trace_store::ingest(run.result);
            for (const auto& b : run.result.blocks) {
                if (b.type != block_type::tracked) continue;
                std::set<qualified_name> closure;
                for (const auto& n : testing::oracle_closure(prog.deps, b.name)) closure.insert(qualified_name::parse(n));
                auto expected = testing::oracle_runtime_deps(run.result, b.id, closure, [&](const block_record& c) {
                    return prog.functions.contains(c.name) ? qualified_name{c.name, "<module>"}
                                                           : qualified_name{c.name, std::string(builtin_scope)};
                });
                auto got = deps::runtime_deps(st, b.id);
                expect(got == expected, "program " + std::to_string(seed) + ", record " + std::to_string(b.id) +
                                                ": " + std::to_string(got.size()) + " blocks, oracle " +
                                                std::to_string(expected.size()));
                ++checked;
            }
        }
        return std::to_string(dependency_programs) + " programs, " + std::to_string(checked) + " records matched";
    }

    std::string store_properties() {
        auto t0 = clock_type::now();
        std::mt19937_64 rng(2024);
        std::size_t total_blocks = 0;
        for (int k = 0; k < store_cases; ++k) {
            // Log-uniform sizes up to the cap, with the cap itself once.
            std::size_t n = k == 0 ? store_max_blocks
                                   : static_cast<std::size_t>(std::exp(std::uniform_real_distribution<double>(
                                             0.0, std::log(static_cast<double>(store_max_blocks)))(rng)));
            auto t = testing::random_trace(static_cast<std::uint64_t>(k) + 1, {.blocks = n});
            total_blocks += t.blocks.size();
            auto st = store::trace_store::ingest(t);
            expect(st.reconstruct() == t, "case " + std::to_string(k) + ": round-trip differs");

            const auto& names = t.spec.targets;
            auto target = names[rng() % names.size()];
            auto name = target.name + "@" + target.scope;
            auto all = st.select_values(name);

            std::set<std::int64_t> even, odd, every;
            for (const auto& r : all) {
                every.insert(r.id);
                (rng() % 2 ? even : odd).insert(r.id);
            }
            store::value_filter fe, fo;
            fe.ids = even;
            fo.ids = odd;
            auto a = st.select_values(name, fe), b = st.select_values(name, fo);
            std::set<std::int64_t> joined;
            for (const auto& r : a) joined.insert(r.id);
            for (const auto& r : b) expect(joined.insert(r.id).second, "id filters overlap");
            expect(joined == every, "case " + std::to_string(k) + ": id filters do not partition");

            double cut = std::uniform_real_distribution<double>(-1000.0, 1000.0)(rng);
            store::value_filter below, above;
            below.max = cut;
            below.max_exclusive = true;
            above.min = cut;
            std::set<std::int64_t> finite, split;
            for (const auto& r : all)
                if (r.val.is_finite_number()) finite.insert(r.id);
            for (const auto& r : st.select_values(name, below)) split.insert(r.id);
            for (const auto& r : st.select_values(name, above))
                expect(split.insert(r.id).second, "range filters overlap");
            expect(split == finite, "case " + std::to_string(k) + ": range filters do not partition");

            auto root = static_cast<block_id>(rng() % t.blocks.size());
            std::set<std::int64_t> under;
            for (const auto& r : all) {
                for (std::optional<block_id> p = r.block; p; p = t.at(*p).parent)
                    if (*p == root) {
                        under.insert(r.id);
                        break;
                    }
            }
            std::set<std::int64_t> got;
            for (const auto& r : st.subtree_values(name, root, false).rows) got.insert(r.id);
            expect(got == under, "case " + std::to_string(k) + ": subtree differs from the ancestor walk");
        }
        double elapsed = seconds_since(t0);
        expect(elapsed < store_budget_s, "took " + std::to_string(elapsed) + " s");
        return std::to_string(store_cases) + " random traces (" + std::to_string(total_blocks) +
               " blocks) round-trip, partition and match the ancestor walk";
    }

    std::string plot_admissibility() {
        using store::data_type;
        using store::plot_kind;
        const auto Q = data_type::quantitative, N = data_type::nominal;
        struct row {
            std::vector<data_type> types;
            bool grouped;
            std::set<plot_kind> plots;
        };
        // Transcription of the data-type table; grouped Q additionally allows box plots.
        const std::vector<row> table{
                {{Q}, false, {plot_kind::histogram}},
                {{N}, false, {plot_kind::bar}},
                {{Q, Q}, false, {plot_kind::scatter}},
                {{Q, Q, Q}, false, {plot_kind::parallel_coordinates}},
                {{Q, Q, Q, Q}, false, {plot_kind::parallel_coordinates}},
                {{Q, Q, Q, Q, Q}, false, {plot_kind::parallel_coordinates}},
                {{N}, true, {plot_kind::small_multiples}},
                {{Q}, true, {plot_kind::small_multiples, plot_kind::box}},
                {{Q, Q}, true, {plot_kind::small_multiples}},
        };
        std::size_t checked = 0;
        for (std::size_t n = 1; n <= 5; ++n) {
            for (unsigned mask = 0; mask < (1U << n); ++mask) {
                for (bool grouped : {false, true}) {
                    store::data_signature sig;
                    sig.grouped = grouped;
                    for (std::size_t i = 0; i < n; ++i) sig.types.push_back(mask & (1U << i) ? N : Q);
                    std::set<plot_kind> expected;
                    for (const auto& r : table)
                        if (r.types == sig.types && r.grouped == grouped) expected = r.plots;
                    auto got = store::admissible_plots(sig);
                    std::set<plot_kind> got_set(got.begin(), got.end());
                    expect(got_set == expected, "signature " + std::to_string(checked) + " disagrees");
                    ++checked;
                }
            }
        }
        return std::to_string(checked) + " signatures match the table";
    }

    std::vector<std::string> split_csv_line(const std::string& line) {
        std::vector<std::string> out;
        std::string cur;
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            char c = line[i];
            if (quoted) {
                if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else if (c == '"') {
                    quoted = false;
                } else {
                    cur += c;
                }
            } else if (c == '"') {
                quoted = true;
            } else if (c == ',') {
                out.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        out.push_back(cur);
        return out;
    }

    std::string cli_end_to_end() {
        auto dir = fs::temp_directory_path() / ("tracescope-cli-" + std::to_string(::getpid()));
        fs::create_directories(dir);
        fs::copy_file(testing::fixture("corpus/fib.py"), dir / "fib.py", fs::copy_options::overwrite_existing);
        process_options run;
        run.argv = {TS_TRACE_BIN, "run", (dir / "fib.py").string(), "--track", "val", "--out", (dir / "fib.db").string()};
        run.timeout = std::chrono::seconds(60);
        auto r = run_process(run);
        expect(r.exit_code == 0, "trace run exited with " + std::to_string(r.exit_code) + ": " + r.err);
        expect(r.out == "13\n", "trace run printed " + r.out);

        process_options query;
        query.argv = {TS_TRACE_BIN, "query", (dir / "fib.db").string(), "--name", "val", "--format", "csv"};
        query.timeout = std::chrono::seconds(60);
        auto q = run_process(query);
        expect(q.exit_code == 0, "trace query exited with " + std::to_string(q.exit_code) + ": " + q.err);

        auto rows = store::trace_store::open(dir / "fib.db").select_values("val");
        fs::remove_all(dir);
        std::istringstream in(q.out);
        std::string line;
        std::getline(in, line);
        expect(line == "id,name,line,ts,kind,value,parent_id,block_id,iteration", "header is " + line);
        std::size_t i = 0;
        for (; std::getline(in, line); ++i) {
            expect(i < rows.size(), "more CSV rows than select_values");
            auto f = split_csv_line(line);
            expect(f.size() == 9, "row " + std::to_string(i) + " has " + std::to_string(f.size()) + " fields");
            const auto& v = rows[i];
            expect(std::stoll(f[0]) == v.id && f[1] == v.name && std::stoi(f[2]) == v.line && std::stoll(f[3]) == v.ts,
                   "row " + std::to_string(i) + " identity differs");
            expect(f[4] == to_string(v.val.kind) && v.val.kind == value_kind::integer && std::stoll(f[5]) == v.val.i,
                   "row " + std::to_string(i) + " value differs");
            expect(std::stoll(f[6]) == v.parent && std::stoll(f[7]) == v.block, "row " + std::to_string(i) + " links differ");
            expect(f[8].empty() == !v.iteration, "row " + std::to_string(i) + " iteration differs");
        }
        expect(i == rows.size(), std::to_string(i) + " CSV rows, select_values has " + std::to_string(rows.size()));
        expect(i == 12, "expected 12 val rows, got " + std::to_string(i));
        return std::to_string(i) + " CSV rows equal select_values";
    }

}  // namespace

int main() {
    criterion("semantic-preservation", semantic_preservation);
    criterion("fibonacci-structure", fib_structure);
    criterion("call-order-hoisting", call_order);
    criterion("gradient-descent", gradient_descent);
    criterion("dependency-equivalence", dependency_equivalence);
    criterion("store-round-trip-and-conservation", store_properties);
    criterion("plot-admissibility", plot_admissibility);
    criterion("cli-end-to-end", cli_end_to_end);
    std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
    return failures;
}
