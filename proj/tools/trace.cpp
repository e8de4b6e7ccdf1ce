#include "tracescope/deps/dependency.hpp"
#include "tracescope/error.hpp"
#include "tracescope/instrument/pipeline.hpp"
#include "tracescope/service/http_api.hpp"
#include "tracescope/service/runner.hpp"
#include "tracescope/service/session.hpp"
#include "tracescope/store/plot.hpp"
#include "tracescope/store/trace_store.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <csignal>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

using namespace tracescope;
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

    track_target parse_target(const std::string& text) {
        auto at = text.find('@');
        track_target t;
        t.name = text.substr(0, at);
        if (at != std::string::npos) t.scope = text.substr(at + 1);
        if (t.name.empty()) throw error(error_code::invalid_argument, "empty target in '" + text + "'");
        return t;
    }

    int parse_int(const std::string& text, const std::string& what) {
        int v = 0;
        auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc() || end != text.data() + text.size())
            throw error(error_code::invalid_argument, what + " must be an integer, got '" + text + "'");
        return v;
    }

    double parse_double(const std::string& text, const std::string& what) {
        try {
            std::size_t used = 0;
            double v = std::stod(text, &used);
            if (used == text.size()) return v;
        } catch (const std::exception&) {
        }
        throw error(error_code::invalid_argument, what + " must be a number, got '" + text + "'");
    }

    // LINE:EXPR, e.g. "7:fib(n - 1) + fib(n - 2)".
    track_target parse_expression_target(const std::string& text) {
        auto colon = text.find(':');
        if (colon == std::string::npos || colon + 1 >= text.size())
            throw error(error_code::invalid_argument, "--track-expr expects LINE:EXPR, got '" + text + "'");
        int line = parse_int(text.substr(0, colon), "--track-expr line");
        track_target t;
        t.kind = target_kind::expression;
        t.name = text.substr(colon + 1);
        t.span = {"", line, line, 0, 0};
        return t;
    }

    // LABEL=EXPR@ANCHOR where ANCHOR is a tracked name.
    custom_expression parse_custom(const std::string& text) {
        auto eq = text.find('=');
        auto at = text.rfind('@');
        if (eq == std::string::npos || at == std::string::npos || at < eq)
            throw error(error_code::invalid_argument, "--custom expects LABEL=EXPR@ANCHOR, got '" + text + "'");
        custom_expression c;
        c.label = text.substr(0, eq);
        c.expression_text = text.substr(eq + 1, at - eq - 1);
        c.anchor = parse_target(text.substr(at + 1));
        return c;
    }

    // KEY=VALUE pairs: min, max, max_exclusive, subtree, ts_from, ts_to, ids (comma separated).
    store::value_filter parse_filters(const std::vector<std::string>& items) {
        store::value_filter f;
        for (const auto& item : items) {
            auto eq = item.find('=');
            if (eq == std::string::npos)
                throw error(error_code::invalid_argument, "--filter expects KEY=VALUE, got '" + item + "'");
            auto key = item.substr(0, eq);
            auto val = item.substr(eq + 1);
            if (key == "min") f.min = parse_double(val, key);
            else if (key == "max") f.max = parse_double(val, key);
            else if (key == "max_exclusive") f.max_exclusive = val == "1" || val == "true";
            else if (key == "subtree") f.subtree = parse_int(val, key);
            else if (key == "ts_from") f.ts_from = parse_int(val, key);
            else if (key == "ts_to") f.ts_to = parse_int(val, key);
            else if (key == "ids") {
                std::set<std::int64_t> ids;
                std::stringstream ss(val);
                for (std::string part; std::getline(ss, part, ',');)
                    if (!part.empty()) ids.insert(parse_int(part, "ids"));
                f.ids = ids;
            } else {
                throw error(error_code::invalid_argument, "unknown filter key '" + key + "'");
            }
        }
        return f;
    }

    std::string csv_field(const std::string& s) {
        if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
        std::string out = "\"";
        for (char c : s) {
            if (c == '"') out += '"';
            out += c;
        }
        return out + "\"";
    }

    std::vector<std::string> row_fields(const store::value_row& r) {
        return {std::to_string(r.id),
                r.name,
                std::to_string(r.line),
                std::to_string(r.ts),
                std::string(to_string(r.val.kind)),
                r.val.to_display(),
                std::to_string(r.parent),
                std::to_string(r.block),
                r.iteration ? std::to_string(*r.iteration) : std::string()};
    }

    const std::vector<std::string> row_header{"id",    "name",      "line",     "ts",       "kind",
                                              "value", "parent_id", "block_id", "iteration"};

    void print_rows(const std::vector<store::value_row>& rows, const std::string& format) {
        if (format == "csv") {
            for (std::size_t i = 0; i < row_header.size(); ++i) std::cout << (i ? "," : "") << row_header[i];
            std::cout << "\n";
            for (const auto& r : rows) {
                auto fields = row_fields(r);
                for (std::size_t i = 0; i < fields.size(); ++i) std::cout << (i ? "," : "") << csv_field(fields[i]);
                std::cout << "\n";
            }
        } else if (format == "json") {
            json out = json::array();
            for (const auto& r : rows) out.push_back(store::row_to_json(r));
            std::cout << out.dump(2) << "\n";
        } else {
            std::vector<std::size_t> width(row_header.size());
            std::vector<std::vector<std::string>> cells;
            cells.push_back(row_header);
            for (const auto& r : rows) cells.push_back(row_fields(r));
            for (const auto& row : cells)
                for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
            for (const auto& row : cells) {
                for (std::size_t i = 0; i < row.size(); ++i) {
                    bool last = i + 1 == row.size();
                    std::cout << (i ? "  " : "") << std::left << std::setw(last ? 0 : static_cast<int>(width[i])) << row[i];
                }
                std::cout << "\n";
            }
        }
    }

    trace_spec build_spec(const std::string& spec_file, const std::vector<std::string>& tracks,
                          const std::vector<std::string>& exprs, const std::vector<std::string>& customs,
                          const std::vector<std::string>& excludes, bool no_defaults) {
        trace_spec spec;
        if (!spec_file.empty()) {
            std::ifstream in(spec_file);
            if (!in) throw error(error_code::io_error, "cannot read spec " + spec_file);
            try {
                spec = spec_from_json(json::parse(in));
            } catch (const nlohmann::json::exception& e) {
                throw error(error_code::invalid_argument, "spec " + spec_file + " is not JSON: " + e.what());
            }
        }
        for (const auto& t : tracks) spec.targets.push_back(parse_target(t));
        for (const auto& e : exprs) spec.targets.push_back(parse_expression_target(e));
        for (const auto& c : customs) spec.customs.push_back(parse_custom(c));
        spec.exclusions.insert(spec.exclusions.end(), excludes.begin(), excludes.end());
        if (no_defaults) spec.override_default_exclusions = true;
        return spec;
    }

    service::http_api* active_server = nullptr;

    void on_signal(int) {
        if (active_server) active_server->stop();
    }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Record, store and query execution traces of Python programs."};
    app.require_subcommand(1);

    std::string config_file;
    app.add_option("--config", config_file, "JSON config with exclusions, caps and timeout")->check(CLI::ExistingFile);

    // run
    auto* run = app.add_subcommand("run", "Instrument and run a program, writing its trace");
    std::string entry, out, spec_file;
    std::vector<std::string> tracks, exprs, customs, excludes;
    bool no_defaults = false, keep_shadow = false;
    std::optional<double> timeout_s;
    std::optional<std::size_t> event_cap;
    run->add_option("entry", entry, "Entry Python file")->required()->check(CLI::ExistingFile);
    run->add_option("--track", tracks, "Variable to track, as name or name@scope");
    run->add_option("--track-expr", exprs, "Expression to track, as LINE:EXPR");
    run->add_option("--custom", customs, "Custom expression, as LABEL=EXPR@ANCHOR");
    run->add_option("--exclude", excludes, "Call pattern to leave untraced");
    run->add_flag("--no-default-exclusions", no_defaults, "Do not merge the default exclusion list");
    run->add_option("--spec", spec_file, "Trace specification JSON")->check(CLI::ExistingFile);
    run->add_option("--out", out, "Trace file to write (default: <entry>.trace.db)");
    run->add_option("--timeout", timeout_s, "Wall-clock limit in seconds");
    run->add_option("--event-cap", event_cap, "Maximum number of recorded events");
    run->add_flag("--keep-shadow", keep_shadow, "Keep the instrumented copy for inspection");

    // query
    auto* query = app.add_subcommand("query", "Print the values recorded for a name");
    std::string trace_file, name, format = "table";
    std::vector<std::string> filters;
    query->add_option("trace", trace_file, "Trace file")->required()->check(CLI::ExistingFile);
    query->add_option("--name", name, "Tracked name or custom label")->required();
    query->add_option("--filter", filters, "KEY=VALUE with keys min, max, max_exclusive, subtree, ts_from, ts_to, ids");
    query->add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "table", "json"}));

    // names
    auto* names = app.add_subcommand("names", "List the tracked names of a trace");
    names->add_option("trace", trace_file, "Trace file")->required()->check(CLI::ExistingFile);

    // plot
    auto* plot = app.add_subcommand("plot", "Evaluate a plot query (JSON) and print the payload");
    std::string plot_json;
    plot->add_option("trace", trace_file, "Trace file")->required()->check(CLI::ExistingFile);
    plot->add_option("--query", plot_json, "Plot query JSON")->required();

    // deps
    auto* deps = app.add_subcommand("deps", "Show the blocks a tracked record depends on");
    block_id block = 0;
    deps->add_option("trace", trace_file, "Trace file")->required()->check(CLI::ExistingFile);
    deps->add_option("--block", block, "Tracked record id")->required();

    // instrument
    auto* instr = app.add_subcommand("instrument", "Print the instrumented program");
    instr->add_option("entry", entry, "Python file")->required()->check(CLI::ExistingFile);
    instr->add_option("--track", tracks, "Variable to track, as name or name@scope");
    instr->add_option("--track-expr", exprs, "Expression to track, as LINE:EXPR");
    instr->add_option("--custom", customs, "Custom expression, as LABEL=EXPR@ANCHOR");
    instr->add_option("--exclude", excludes, "Call pattern to leave untraced");
    instr->add_option("--spec", spec_file, "Trace specification JSON")->check(CLI::ExistingFile);

    // serve
    auto* serve = app.add_subcommand("serve", "Serve the JSON API under /api/v1");
    int port = 8080;
    std::string host = "127.0.0.1";
    serve->add_option("--port", port, "TCP port (0 picks a free one)");
    serve->add_option("--host", host, "Interface to bind");

    CLI11_PARSE(app, argc, argv);

    try {
        service::service_config config;
        if (!config_file.empty()) config = service::load_config(config_file);
        if (timeout_s) {
            if (*timeout_s <= 0) throw error(error_code::invalid_argument, "--timeout must be positive");
            config.run.timeout = std::chrono::milliseconds(static_cast<std::int64_t>(*timeout_s * 1000));
        }
        if (event_cap) config.run.event_cap = *event_cap;
        config.run.keep_shadow = keep_shadow;

        if (run->parsed()) {
            auto bundle = service::load_bundle(entry);
            auto spec = build_spec(spec_file, tracks, exprs, customs, excludes, no_defaults);
            spec.exclusions.insert(spec.exclusions.end(), config.exclusions.begin(), config.exclusions.end());
            auto r = service::run_traced(bundle, spec, config.run);
            fs::path target = out.empty() ? fs::path(entry).replace_extension(".trace.db") : fs::path(out);
            auto st = store::trace_store::ingest(r.result, target);
            std::cout << r.out << std::flush;
            std::cerr << r.err;
            auto c = st.counts();
            std::cerr << "trace: wrote " << target.string() << " (" << c.blocks << " blocks, " << c.tracked
                      << " records, " << c.functions << " calls)";
            if (r.timed_out) std::cerr << ", timed out";
            else if (r.result.aborted) std::cerr << ", aborted";
            std::cerr << "\n";
            if (r.timed_out) return 124;
            return r.exit_code;
        }
        if (query->parsed()) {
            auto st = store::trace_store::open(trace_file);
            print_rows(st.select_values(name, parse_filters(filters)), format);
            return 0;
        }
        if (names->parsed()) {
            auto st = store::trace_store::open(trace_file);
            for (const auto& n : st.names()) std::cout << n << "\n";
            return 0;
        }
        if (plot->parsed()) {
            auto st = store::trace_store::open(trace_file);
            json q;
            try {
                q = json::parse(plot_json);
            } catch (const nlohmann::json::exception& e) {
                throw error(error_code::invalid_argument, std::string("--query is not JSON: ") + e.what());
            }
            std::cout << store::plot_to_json(store::run_plot(st, store::plot_query_from_json(q))).dump(2) << "\n";
            return 0;
        }
        if (deps->parsed()) {
            auto st = store::trace_store::open(trace_file);
            auto b = st.block(block);
            if (b.type != block_type::tracked)
                throw error(error_code::not_a_tracked_block, "block " + std::to_string(block) + " is not a tracked record");
            auto var = qualified_name::parse(b.name);
            auto closure = deps::transitive_deps(st.statics(), var);
            std::cout << "variable: " << var.str() << "\nclosure:";
            for (const auto& q : closure) std::cout << " " << q.str();
            std::cout << "\nblocks:\n";
            for (auto id : deps::runtime_deps(st, closure, block)) {
                auto d = st.block(id);
                std::cout << "  " << id << "  " << to_string(d.type) << "  " << d.name << "  line " << d.line;
                if (d.val) std::cout << "  = " << d.val->to_display();
                std::cout << "\n";
            }
            return 0;
        }
        if (instr->parsed()) {
            auto bundle = service::load_bundle(entry);
            auto spec = build_spec(spec_file, tracks, exprs, customs, excludes, false);
            auto program = instrument::instrument_source(bundle.files.at(bundle.entry), spec, bundle.entry);
            std::cout << program.source;
            return 0;
        }
        if (serve->parsed()) {
            service::session_manager sessions(config);
            service::http_api api(sessions);
            int bound = api.bind(host, port);
            std::cerr << "trace: serving on http://" << host << ":" << bound << std::string(service::api_prefix)
                      << std::endl;
            active_server = &api;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            api.serve();
            active_server = nullptr;
            return 0;
        }
    } catch (const error& e) {
        std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
