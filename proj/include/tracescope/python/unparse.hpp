#pragma once

#include "tracescope/python/ast.hpp"

#include <string>

namespace tracescope::python {

    std::string unparse(const expr& e);
    std::string unparse(const module& m);
    std::string unparse(const std::vector<stmt>& body, int indent = 0);

}  // namespace tracescope::python
