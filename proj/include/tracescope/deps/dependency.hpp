#pragma once

#include "tracescope/static_info.hpp"
#include "tracescope/store/trace_store.hpp"

#include <set>
#include <string>
#include <vector>

namespace tracescope::deps {

    using closure = std::set<qualified_name>;

    // Accepts "x@scope" or a bare name bound in exactly one scope. Throws UnknownVariable.
    qualified_name resolve_variable(const static_info& info, const std::string& text);

    // Least fixed point of direct_deps from `var`, excluding `var` itself
    // unless it depends on itself through a cycle. Throws UnknownVariable.
    closure transitive_deps(const static_info& info, const qualified_name& var);

    // Prior siblings of `selected` and of each of its ancestors, oldest ancestor last.
    std::vector<block_id> candidate_blocks(const store::trace_store& store, block_id selected);

    // The qualified function a call block invokes, resolved from the call
    // site's scope outwards (innermost binding wins), else as a builtin.
    qualified_name called_function(const static_info& info, const store::block_row& call);

    // Candidates whose tracked name, or called function, is in `deps`.
    // Throws NotATrackedBlock when `selected` is not a tracked record.
    std::set<block_id> runtime_deps(const store::trace_store& store, const closure& deps, block_id selected);

    // transitive_deps of the selected record's own name, then runtime_deps.
    std::set<block_id> runtime_deps(const store::trace_store& store, block_id selected);

}  // namespace tracescope::deps
