#pragma once

#include "tracescope/trace.hpp"

#include <cstddef>
#include <map>
#include <string>
#include <thread>
#include <vector>

namespace tracescope {

    inline constexpr std::size_t default_event_cap = 1'000'000;

    struct recorder_options {
        std::size_t event_cap{default_event_cap};
    };

    /// Builds a block tree from enter/exit style events.
    ///
    /// Single-threaded: every call must come from the constructing thread
    /// (ThreadViolation otherwise). Exceeding the event cap throws
    /// TraceTooLarge; closing anything but the innermost open block throws
    /// StackMismatch.
    class recorder {
    public:
        explicit recorder(trace_spec spec = {}, recorder_options options = {});

        block_id enter_call(const std::string& name, int line, std::string label = {});
        void exit_call(block_id id);

        block_id begin_loop(int line, const std::string& key, std::string label = {});
        int begin_iteration(block_id loop);
        // No-op for a loop already closed by abort().
        void end_loop(block_id loop);

        block_id record_value(const std::string& name, value v, int line, bool is_variable);
        std::int64_t record_custom(const std::string& label, value v, int line);

        // Unwinds the stack through `id`, marking every popped block aborted.
        // No-op when `id` is not open.
        void abort(block_id id);

        // Closes (and marks aborted) anything still open and hands over the trace.
        trace finalize(bool abnormal_exit = false);

        void set_static_info(static_info info) { trace_.statics = std::move(info); }
        const std::vector<block_id>& open_blocks() const { return stack_; }
        std::size_t events() const { return events_; }

    private:
        trace trace_;
        recorder_options options_;
        std::vector<block_id> stack_{0};
        std::map<block_id, int> iteration_counters_{};
        timestamp next_ts_{1};
        std::size_t events_{0};
        std::thread::id owner_;
        bool finalized_{false};

        void on_event();
        block_record& open(block_type type, int line, std::string name, std::string label);
        block_record& at(block_id id) { return trace_.blocks[static_cast<std::size_t>(id)]; }
        std::optional<int> current_iteration() const;
        [[noreturn]] void mismatch(const std::string& what) const;
    };

}  // namespace tracescope
