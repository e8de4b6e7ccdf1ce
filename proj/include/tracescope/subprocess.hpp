#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tracescope {

    struct process_options {
        std::vector<std::string> argv{};
        std::filesystem::path working_dir{};
        // Added to (or overriding) the inherited environment.
        std::map<std::string, std::string> env{};
        std::optional<std::chrono::milliseconds> timeout{};
        std::size_t output_cap{16 * 1024 * 1024};
    };

    struct process_result {
        int exit_code{-1};
        // Set when the child was terminated by a signal (including our timeout kill).
        std::optional<int> term_signal{};
        bool timed_out{false};
        std::string out{};
        std::string err{};
        std::chrono::milliseconds elapsed{};
    };

    // Runs a child in its own process group; on timeout the whole group is
    // killed. Throws error(io_error) when the child cannot be started.
    process_result run_process(const process_options& options);

}  // namespace tracescope
