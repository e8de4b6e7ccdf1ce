#pragma once

#include "tracescope/instrument/scopes.hpp"
#include "tracescope/python/ast.hpp"
#include "tracescope/static_info.hpp"
#include "tracescope/trace_spec.hpp"

#include <string>
#include <string_view>

namespace tracescope::instrument {

    // Function/class/loop spans, symbols and the direct-dependency map of the
    // unmodified source. Throws error(parse_error) for the string overload.
    static_info collect_static_info(const python::module& m, const scope_table& scopes, const std::string& file);
    static_info collect_static_info(std::string_view source, const std::string& file = {});

    // Adds a direct-dependency entry for every tracked expression of a
    // validated spec, keyed by its canonical text and scope.
    void add_expression_dependencies(static_info& info, const scope_table& scopes, const trace_spec& spec);

    // "line:col" key of a loop statement or comprehension clause.
    std::string loop_key(const python::position& pos);

}  // namespace tracescope::instrument
