#pragma once

#include "tracescope/instrument/scopes.hpp"
#include "tracescope/python/parser.hpp"
#include "tracescope/trace_spec.hpp"

namespace tracescope::testing {

    // Every variable and parameter bound in a trackable scope.
    inline trace_spec track_everything(const std::string& source) {
        auto m = python::parse_module(source);
        auto scopes = instrument::scope_table::build(m);
        trace_spec spec;
        for (const auto& s : scopes.scopes()) {
            if (!instrument::scope_table::trackable(s.type)) continue;
            for (const auto& [name, kind] : s.kinds) {
                if (kind != symbol_kind::variable && kind != symbol_kind::parameter) continue;
                if (s.globals.contains(name) || s.nonlocals.contains(name)) continue;
                spec.targets.push_back({name, target_kind::variable, s.path, {}});
            }
        }
        return spec;
    }

}  // namespace tracescope::testing
