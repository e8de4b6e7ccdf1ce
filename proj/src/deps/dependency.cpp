#include "tracescope/deps/dependency.hpp"

#include "tracescope/error.hpp"

#include <deque>

namespace tracescope::deps {

    namespace {

        bool defined(const static_info& info, const qualified_name& q) {
            return info.direct_deps.contains(q) || info.symbols.contains(q);
        }

        // Enclosing scope paths of `scope`, innermost first, ending at the module.
        std::vector<std::string> scope_chain(const std::string& scope) {
            std::vector<std::string> out;
            std::string s = scope;
            while (!s.empty() && s != "<module>") {
                out.push_back(s);
                auto dot = s.rfind('.');
                if (dot == std::string::npos) break;
                s = s.substr(0, dot);
            }
            out.emplace_back("<module>");
            return out;
        }

    }  // namespace

    qualified_name resolve_variable(const static_info& info, const std::string& text) {
        auto at = text.rfind('@');
        if (at != std::string::npos && at > 0) {
            auto q = qualified_name::parse(text);
            if (defined(info, q)) return q;
            throw error(error_code::unknown_variable, "'" + text + "' is not defined in the source");
        }
        std::vector<qualified_name> matches;
        for (const auto& [q, _] : info.symbols)
            if (q.name == text && q.scope != builtin_scope) matches.push_back(q);
        for (const auto& [q, _] : info.direct_deps)
            if (q.name == text && std::find(matches.begin(), matches.end(), q) == matches.end()) matches.push_back(q);
        if (matches.size() == 1) return matches.front();
        if (matches.empty()) throw error(error_code::unknown_variable, "'" + text + "' is not defined in the source");
        std::string list;
        for (const auto& m : matches) list += (list.empty() ? "" : ", ") + m.str();
        throw error(error_code::unknown_variable, "'" + text + "' is bound in several scopes: " + list);
    }

    closure transitive_deps(const static_info& info, const qualified_name& var) {
        if (!defined(info, var)) throw error(error_code::unknown_variable, "'" + var.str() + "' is not defined in the source");
        closure out;
        std::deque<qualified_name> work{var};
        while (!work.empty()) {
            auto q = work.front();
            work.pop_front();
            auto it = info.direct_deps.find(q);
            if (it == info.direct_deps.end()) continue;
            for (const auto& d : it->second)
                if (out.insert(d).second) work.push_back(d);
        }
        return out;
    }

    std::vector<block_id> candidate_blocks(const store::trace_store& store, block_id selected) {
        std::vector<block_id> out;
        auto b = store.block(selected);
        while (b.parent) {
            for (const auto& sib : store.children(*b.parent)) {
                if (sib.ts >= b.ts) break;
                out.push_back(sib.id);
            }
            b = store.block(*b.parent);
        }
        return out;
    }

    qualified_name called_function(const static_info& info, const store::block_row& call) {
        std::string name = call.name;
        if (auto dot = name.find('.'); dot != std::string::npos) name = name.substr(0, dot);
        for (const auto& scope : scope_chain(info.scope_at_line(call.line))) {
            qualified_name q{name, scope};
            if (info.symbols.contains(q) || info.direct_deps.contains(q)) return q;
        }
        return {name, std::string(builtin_scope)};
    }

    std::set<block_id> runtime_deps(const store::trace_store& store, const closure& deps, block_id selected) {
        auto sel = store.block(selected);
        if (sel.type != block_type::tracked)
            throw error(error_code::not_a_tracked_block, "block " + std::to_string(selected) + " is a " +
                                                                 std::string(to_string(sel.type)) + " block");
        std::set<block_id> out;
        for (auto id : candidate_blocks(store, selected)) {
            auto b = store.block(id);
            if (b.type == block_type::tracked) {
                if (deps.contains(qualified_name::parse(b.name))) out.insert(id);
            } else if (b.type == block_type::call) {
                if (deps.contains(called_function(store.statics(), b))) out.insert(id);
            }
        }
        return out;
    }

    std::set<block_id> runtime_deps(const store::trace_store& store, block_id selected) {
        auto sel = store.block(selected);
        if (sel.type != block_type::tracked)
            throw error(error_code::not_a_tracked_block, "block " + std::to_string(selected) + " is a " +
                                                                 std::string(to_string(sel.type)) + " block");
        return runtime_deps(store, transitive_deps(store.statics(), qualified_name::parse(sel.name)), selected);
    }

}  // namespace tracescope::deps
