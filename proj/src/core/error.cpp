#include "tracescope/error.hpp"

namespace tracescope {

    std::string_view to_string(error_code code) {
        switch (code) {
            case error_code::parse_error: return "ParseError";
            case error_code::unsupported_construct: return "UnsupportedConstruct";
            case error_code::unresolvable_target: return "UnresolvableTarget";
            case error_code::duplicate_target: return "DuplicateTarget";
            case error_code::invalid_spec: return "InvalidSpec";
            case error_code::emit_error: return "EmitError";
            case error_code::malformed_trace: return "MalformedTrace";
            case error_code::stack_mismatch: return "StackMismatch";
            case error_code::sink_io_error: return "SinkIOError";
            case error_code::trace_too_large: return "TraceTooLarge";
            case error_code::thread_violation: return "ThreadViolation";
            case error_code::schema_violation: return "SchemaViolation";
            case error_code::unknown_name: return "UnknownName";
            case error_code::unknown_block: return "UnknownBlock";
            case error_code::incompatible: return "Incompatible";
            case error_code::too_many_groups: return "TooManyGroups";
            case error_code::not_admissible: return "NotAdmissible";
            case error_code::unknown_variable: return "UnknownVariable";
            case error_code::not_a_tracked_block: return "NotATrackedBlock";
            case error_code::unknown_session: return "UnknownSession";
            case error_code::invalid_state: return "InvalidState";
            case error_code::timeout: return "Timeout";
            case error_code::subject_crash: return "SubjectCrash";
            case error_code::invalid_argument: return "InvalidArgument";
            case error_code::io_error: return "IOError";
        }
        return "Unknown";
    }

}  // namespace tracescope
