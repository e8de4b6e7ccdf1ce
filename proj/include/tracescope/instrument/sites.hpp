#pragma once

#include "tracescope/instrument/scopes.hpp"
#include "tracescope/python/ast.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace tracescope::instrument {

    struct expression_site {
        python::position pos{};
        // False inside lambdas, generator/set/dict comprehensions, class
        // bodies, decorators, defaults, binding targets and while-else tests.
        bool hoistable{true};
        int scope{0};
    };

    using site_visitor = std::function<void(python::expr&, bool hoistable, int scope)>;

    // Visits every expression in load position, pre-order.
    void visit_expression_sites(python::module& m, const scope_table& scopes, const site_visitor& fn);

    // Canonical spelling used to compare user expressions with source nodes.
    std::string canonical_expression(const std::string& text);

    std::vector<expression_site> find_expression_sites(const python::module& m, const scope_table& scopes,
                                                       const std::string& canonical, int line,
                                                       std::optional<int> col);

}  // namespace tracescope::instrument
