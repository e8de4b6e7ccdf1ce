#pragma once

#include "tracescope/error.hpp"
#include "tracescope/instrument/scopes.hpp"
#include "tracescope/python/ast.hpp"
#include "tracescope/source_span.hpp"
#include "tracescope/trace_spec.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace tracescope::instrument {

    struct spec_issue {
        error_code code{error_code::invalid_spec};
        std::string message{};
        source_span span{};
    };

    struct validation_result {
        trace_spec spec{};
        std::vector<spec_issue> issues{};

        bool ok() const { return issues.empty(); }
        // Throws error with the first issue's code and every message joined.
        const trace_spec& value() const;
    };

    // Resolves every target to a unique scope and span. Expression targets
    // take their canonical spelling; variable targets get their first binding
    // site as span when none was given.
    validation_result validate_spec(const trace_spec& spec, const python::module& m, const scope_table& scopes,
                                    const std::string& file);
    validation_result validate_spec(const trace_spec& spec, std::string_view source, const std::string& file = {});

    // Innermost trackable scope whose span contains `line`.
    int scope_index_at_line(const scope_table& scopes, int line);

    bool is_identifier(std::string_view text);

}  // namespace tracescope::instrument
