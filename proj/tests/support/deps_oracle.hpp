#pragma once

#include "tracescope/static_info.hpp"
#include "tracescope/trace.hpp"

#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace tracescope::testing {

    using dep_graph = std::map<std::string, std::set<std::string>>;

    // Reachability by Warshall's algorithm over the whole direct-dependency graph.
    inline std::set<std::string> oracle_closure(const dep_graph& g, const std::string& var) {
        std::vector<std::string> nodes;
        std::map<std::string, std::size_t> index;
        auto id = [&](const std::string& q) {
            auto [it, fresh] = index.try_emplace(q, nodes.size());
            if (fresh) nodes.push_back(q);
            return it->second;
        };
        id(var);
        for (const auto& [k, v] : g) {
            id(k);
            for (const auto& d : v) id(d);
        }
        auto n = nodes.size();
        std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
        for (const auto& [k, v] : g)
            for (const auto& d : v) reach[index[k]][index[d]] = 1;
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t i = 0; i < n; ++i)
                if (reach[i][k])
                    for (std::size_t j = 0; j < n; ++j)
                        if (reach[k][j]) reach[i][j] = 1;
        std::set<std::string> out;
        auto v = index[var];
        for (std::size_t j = 0; j < n; ++j)
            if (reach[v][j]) out.insert(nodes[j]);
        return out;
    }

    inline dep_graph to_graph(const static_info& info) {
        dep_graph g;
        for (const auto& [k, v] : info.direct_deps) {
            auto& slot = g[k.str()];
            for (const auto& d : v) slot.insert(d.str());
        }
        return g;
    }

    inline std::set<qualified_name> oracle_closure(const static_info& info, const qualified_name& var) {
        std::set<qualified_name> out;
        for (const auto& s : oracle_closure(to_graph(info), var.str())) out.insert(qualified_name::parse(s));
        return out;
    }

    // Enumerates prior siblings of the block and of each ancestor by walking
    // the in-memory tree, keeping those whose name maps into the closure.
    inline std::set<block_id> oracle_runtime_deps(const trace& t, block_id selected,
                                                  const std::set<qualified_name>& closure,
                                                  const std::function<qualified_name(const block_record&)>& call_target) {
        std::set<block_id> out;
        const block_record* node = &t.at(selected);
        while (node->parent) {
            const auto& parent = t.at(*node->parent);
            for (auto c : parent.children) {
                const auto& sib = t.at(c);
                if (sib.ts >= node->ts) continue;
                if (sib.type == block_type::tracked && closure.contains(qualified_name::parse(sib.name))) out.insert(c);
                if (sib.type == block_type::call && closure.contains(call_target(sib))) out.insert(c);
            }
            node = &parent;
        }
        return out;
    }

}  // namespace tracescope::testing
