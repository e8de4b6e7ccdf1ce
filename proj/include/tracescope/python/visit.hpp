#pragma once

#include "tracescope/python/ast.hpp"

#include <functional>

namespace tracescope::python {

    // Pre-order walk over every expression reachable from the node,
    // including nested statement bodies.
    void walk_exprs(const expr& e, const std::function<void(const expr&)>& fn);
    void walk_exprs(const stmt& s, const std::function<void(const expr&)>& fn);
    void walk_stmts(const std::vector<stmt>& body, const std::function<void(const stmt&)>& fn);

    // Every identifier that appears anywhere (names, params, attributes,
    // def/class names, imports, keyword argument names).
    void collect_identifiers(const module& m, std::vector<std::string>& out);

}  // namespace tracescope::python
