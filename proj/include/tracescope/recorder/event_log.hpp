#pragma once

#include "tracescope/recorder/recorder.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tracescope {

    // Environment read by the runtime module inside the subject process.
    inline constexpr std::string_view events_path_env = "TRACESCOPE_EVENTS";
    inline constexpr std::string_view event_cap_env = "TRACESCOPE_EVENT_CAP";

    // Python source of the runtime module imported by instrumented programs.
    // It appends one tab-separated line per hook to the events file.
    std::string runtime_module_source();

    struct replay_outcome {
        trace result{};
        // The runtime saw the interpreter shut down normally.
        bool finished{false};
        // Exception type name when the subject died of an uncaught exception.
        std::optional<std::string> uncaught{};
        std::size_t events{0};
        bool overflowed{false};
    };

    // Rebuilds a trace from an events file. Block labels are taken from
    // `source_lines` (1-based line numbers). A truncated final line is ignored.
    // Throws MalformedTrace, StackMismatch, TraceTooLarge or ThreadViolation.
    // With `tolerate_overflow` an overflow marker ends the log instead of
    // throwing (used for runs that were killed anyway).
    replay_outcome replay_event_log(std::string_view log, trace_spec spec, const std::vector<std::string>& source_lines,
                                    recorder_options options = {}, bool tolerate_overflow = false);

}  // namespace tracescope
