#pragma once

#include "tracescope/recorder/recorder.hpp"
#include "tracescope/trace.hpp"
#include "tracescope/trace_spec.hpp"

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace tracescope::service {

    struct run_config {
        std::string python{"python3"};
        std::chrono::milliseconds timeout{std::chrono::seconds(60)};
        std::size_t event_cap{default_event_cap};
        // Shadow directories are created below this directory.
        std::filesystem::path work_root{std::filesystem::temp_directory_path()};
        bool keep_shadow{false};
    };

    // Relative path → file text. `entry` names the program to run.
    struct source_bundle {
        std::string entry{};
        std::map<std::string, std::string> files{};
    };

    struct run_result {
        trace result{};
        int exit_code{0};
        bool timed_out{false};
        std::optional<std::string> uncaught{};
        std::string out{};
        std::string err{};
        std::chrono::milliseconds elapsed{};
        std::filesystem::path shadow{};
    };

    // The entry file plus the regular files next to it and any package
    // directories (those holding __init__.py).
    source_bundle load_bundle(const std::filesystem::path& entry_file);

    // Instruments the entry file, runs it in a child process confined to a
    // fresh shadow directory and rebuilds the trace. A run that times out or
    // crashes still yields its partial trace, marked aborted. Throws
    // SubjectCrash when no trace at all was produced.
    run_result run_traced(const source_bundle& bundle, const trace_spec& spec, const run_config& config);

    // Runs the bundle without instrumentation (used for differential checks).
    run_result run_plain(const source_bundle& bundle, const run_config& config);

}  // namespace tracescope::service
