#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tracescope {

    // Stable codes; the HTTP layer and CLI report these verbatim.
    enum class error_code {
        parse_error,
        unsupported_construct,
        unresolvable_target,
        duplicate_target,
        invalid_spec,
        emit_error,
        malformed_trace,
        stack_mismatch,
        sink_io_error,
        trace_too_large,
        thread_violation,
        schema_violation,
        unknown_name,
        unknown_block,
        incompatible,
        too_many_groups,
        not_admissible,
        unknown_variable,
        not_a_tracked_block,
        unknown_session,
        invalid_state,
        timeout,
        subject_crash,
        invalid_argument,
        io_error,
    };

    std::string_view to_string(error_code code);

    class error : public std::runtime_error {
      public:
        error(error_code code, const std::string& message) : std::runtime_error(message), code_(code) {}

        error_code code() const noexcept { return code_; }

      private:
        error_code code_;
    };

}  // namespace tracescope
