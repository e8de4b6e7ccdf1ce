#pragma once

#include "tracescope/instrument/scopes.hpp"
#include "tracescope/python/ast.hpp"
#include "tracescope/static_info.hpp"
#include "tracescope/trace_spec.hpp"

#include <string>
#include <vector>

namespace tracescope::instrument {

    /// Naming for everything the rewriter introduces.
    struct rewrite_plan {
        std::string temp_prefix{"__tr_tmp_"};
        std::string runtime_module{"_tr_rt"};
        int next_temp{0};

        std::string fresh() { return temp_prefix + std::to_string(next_temp++); }
        bool is_temp(const std::string& name) const { return name.rfind(temp_prefix, 0) == 0; }

        // Picks a prefix and runtime name no identifier in `m` starts with.
        static rewrite_plan for_module(const python::module& m);
    };

    // Statement markers shared by normalize and instrument.
    inline constexpr std::string_view loop_guard_marker = "loop-guard";
    inline constexpr std::string_view lowered_while_marker = "lowered-while";

    // Sets expr::track_id on every source node matching an expression target;
    // the id is the target's index in spec.targets.
    void mark_tracked_expressions(python::module& m, const scope_table& scopes, const trace_spec& spec);

    // Hoists calls (and tracked expressions) out of compound expressions into
    // temps, keeping left-to-right evaluation order, and expands list
    // comprehensions into loops. Throws error(unsupported_construct).
    python::module normalize(const python::module& m, const scope_table& scopes, rewrite_plan& plan);

    // Inserts recording hooks into a normalized module.
    python::module instrument(const python::module& normalized, const trace_spec& spec, const scope_table& scopes,
                              rewrite_plan& plan);

    // Source text of an instrumented module, with the runtime import placed
    // after any docstring and __future__ imports. Throws error(emit_error).
    std::string emit(const python::module& instrumented, const rewrite_plan& plan);

    // True when `callee` (dotted, as written) matches an exclusion after
    // resolving import aliases.
    bool is_excluded_call(const std::string& callee, const std::map<std::string, std::string>& aliases,
                          const std::vector<std::string>& exclusions);
    std::map<std::string, std::string> import_aliases(const python::module& m);

}  // namespace tracescope::instrument
