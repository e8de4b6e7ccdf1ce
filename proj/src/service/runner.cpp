#include "tracescope/service/runner.hpp"

#include "tracescope/error.hpp"
#include "tracescope/instrument/pipeline.hpp"
#include "tracescope/recorder/event_log.hpp"
#include "tracescope/subprocess.hpp"

#include <atomic>
#include <fstream>
#include <random>
#include <sstream>

extern "C" {
#include <unistd.h>
}

namespace tracescope::service {

    namespace fs = std::filesystem;

    namespace {

        constexpr std::uintmax_t bundle_cap = 64ULL * 1024 * 1024;

        std::string read_file(const fs::path& p) {
            std::ifstream in(p, std::ios::binary);
            if (!in) throw error(error_code::io_error, "cannot read " + p.string());
            std::stringstream ss;
            ss << in.rdbuf();
            return ss.str();
        }

        void add_tree(const fs::path& dir, const fs::path& base, source_bundle& b, std::uintmax_t& total) {
            for (const auto& e : fs::directory_iterator(dir)) {
                if (e.is_regular_file()) {
                    total += e.file_size();
                    if (total > bundle_cap) throw error(error_code::invalid_argument, "source bundle is too large");
                    b.files[fs::relative(e.path(), base).generic_string()] = read_file(e.path());
                } else if (e.is_directory() && fs::exists(e.path() / "__init__.py")) {
                    add_tree(e.path(), base, b, total);
                }
            }
        }

        fs::path fresh_dir(const fs::path& root) {
            static std::atomic<unsigned> counter{0};
            std::random_device rd;
            for (int attempt = 0; attempt < 100; ++attempt) {
                auto name = "tracescope-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + "-" +
                            std::to_string(rd() % 100000);
                auto dir = root / name;
                if (fs::create_directories(dir)) return dir;
            }
            throw error(error_code::io_error, "cannot create a work directory under " + root.string());
        }

        std::vector<std::string> split_lines(const std::string& text) {
            std::vector<std::string> lines;
            std::string cur;
            for (char c : text) {
                if (c == '\n') {
                    lines.push_back(cur);
                    cur.clear();
                } else {
                    cur.push_back(c);
                }
            }
            if (!cur.empty()) lines.push_back(cur);
            return lines;
        }

        struct cleanup {
            fs::path dir;
            bool keep;
            ~cleanup() {
                if (keep || dir.empty()) return;
                std::error_code ec;
                fs::remove_all(dir, ec);
            }
        };

        const std::string& entry_text(const source_bundle& bundle) {
            auto it = bundle.files.find(bundle.entry);
            if (bundle.entry.empty() || it == bundle.files.end())
                throw error(error_code::invalid_argument, "bundle has no entry file '" + bundle.entry + "'");
            return it->second;
        }

    }  // namespace

    source_bundle load_bundle(const fs::path& entry_file) {
        if (!fs::is_regular_file(entry_file)) throw error(error_code::io_error, "no such file: " + entry_file.string());
        source_bundle b;
        auto dir = entry_file.parent_path().empty() ? fs::path(".") : entry_file.parent_path();
        b.entry = entry_file.filename().string();
        std::uintmax_t total = 0;
        add_tree(dir, dir, b, total);
        return b;
    }

    run_result run_traced(const source_bundle& bundle, const trace_spec& spec, const run_config& config) {
        const auto& source = entry_text(bundle);
        auto program = instrument::instrument_source(source, spec, bundle.entry);

        run_result r;
        r.shadow = fresh_dir(config.work_root);
        cleanup guard{r.shadow, config.keep_shadow};
        instrument::write_shadow(program, r.shadow, bundle.entry, bundle.files);
        auto events_path = r.shadow / ".tracescope-events";

        process_options opt;
        opt.argv = {config.python, bundle.entry};
        opt.working_dir = r.shadow;
        opt.timeout = config.timeout;
        opt.env[std::string(events_path_env)] = events_path.string();
        opt.env[std::string(event_cap_env)] = std::to_string(config.event_cap);
        opt.env["PYTHONDONTWRITEBYTECODE"] = "1";
        auto proc = run_process(opt);
        r.exit_code = proc.exit_code;
        r.timed_out = proc.timed_out;
        r.out = std::move(proc.out);
        r.err = std::move(proc.err);
        r.elapsed = proc.elapsed;

        if (!fs::exists(events_path))
            throw error(error_code::subject_crash, "the program exited with status " + std::to_string(r.exit_code) +
                                                           " before tracing started: " + r.err.substr(0, 2000));
        auto log = read_file(events_path);
        bool killed = r.timed_out || proc.term_signal.has_value();
        if (log.empty() && killed && !r.timed_out)
            throw error(error_code::subject_crash,
                        "the program was killed by signal " + std::to_string(*proc.term_signal) + " before recording");
        recorder_options ro;
        ro.event_cap = config.event_cap;
        auto replay = replay_event_log(log, program.spec, split_lines(source), ro, killed);
        r.result = std::move(replay.result);
        r.result.statics = std::move(program.statics);
        r.result.aborted = r.result.aborted || killed;
        r.uncaught = replay.uncaught;
        return r;
    }

    run_result run_plain(const source_bundle& bundle, const run_config& config) {
        entry_text(bundle);
        run_result r;
        r.shadow = fresh_dir(config.work_root);
        cleanup guard{r.shadow, config.keep_shadow};
        for (const auto& [name, text] : bundle.files) {
            auto path = r.shadow / fs::path(name).lexically_normal();
            fs::create_directories(path.parent_path());
            std::ofstream(path, std::ios::binary) << text;
        }
        process_options opt;
        opt.argv = {config.python, bundle.entry};
        opt.working_dir = r.shadow;
        opt.timeout = config.timeout;
        opt.env["PYTHONDONTWRITEBYTECODE"] = "1";
        auto proc = run_process(opt);
        r.exit_code = proc.exit_code;
        r.timed_out = proc.timed_out;
        r.out = std::move(proc.out);
        r.err = std::move(proc.err);
        r.elapsed = proc.elapsed;
        return r;
    }

}  // namespace tracescope::service
