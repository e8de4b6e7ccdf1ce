#pragma once

#include "tracescope/python/ast.hpp"

#include <string_view>

namespace tracescope::python {

    // Parses a module. Throws error(parse_error) with "line:col: message".
    module parse_module(std::string_view source);

    // Parses a single expression (used for tracked and custom expressions).
    expr parse_expression(std::string_view source);

}  // namespace tracescope::python
