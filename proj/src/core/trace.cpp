#include "tracescope/trace.hpp"

#include "tracescope/error.hpp"

#include <set>

namespace tracescope {

    std::string_view to_string(block_type t) {
        switch (t) {
            case block_type::root: return "root";
            case block_type::call: return "call";
            case block_type::loop: return "loop";
            case block_type::iteration: return "iteration";
            case block_type::tracked: return "tracked";
        }
        return "root";
    }

    std::optional<block_type> block_type_from_string(std::string_view s) {
        for (auto t : {block_type::root, block_type::call, block_type::loop, block_type::iteration, block_type::tracked}) {
            if (to_string(t) == s) return t;
        }
        return std::nullopt;
    }

    trace make_empty_trace(trace_spec spec) {
        trace t;
        t.spec = std::move(spec);
        block_record root;
        root.id = 0;
        root.type = block_type::root;
        root.ts = 0;
        root.label = "<root>";
        t.blocks.push_back(std::move(root));
        return t;
    }

    namespace {
        [[noreturn]] void fail(const std::string& what) { throw error(error_code::malformed_trace, what); }
    }  // namespace

    void check_trace_invariants(const trace& t) {
        if (t.blocks.empty()) fail("trace has no root block");
        const auto& root = t.blocks.front();
        if (root.type != block_type::root || root.parent || root.id != 0) fail("block 0 must be the root");

        std::set<std::string> target_names;
        for (const auto& target : t.spec.targets) target_names.insert(target.name + "@" + target.scope);

        for (std::size_t i = 0; i < t.blocks.size(); ++i) {
            const auto& b = t.blocks[i];
            if (b.id != static_cast<block_id>(i)) fail("block ids must be dense and ordered");
            if (i == 0) continue;
            if (b.type == block_type::root) fail("more than one root block");
            if (!b.parent || *b.parent < 0 || *b.parent >= b.id)
                fail("block " + std::to_string(b.id) + " has an invalid parent");
            const auto& parent = t.blocks[static_cast<std::size_t>(*b.parent)];
            if (parent.ts >= b.ts) fail("block " + std::to_string(b.id) + " is not younger than its parent");
            if (parent.type == block_type::tracked) fail("tracked blocks must be leaves");
            if (b.type == block_type::iteration && parent.type != block_type::loop)
                fail("iteration block outside a loop");
            if (b.type == block_type::tracked && !target_names.empty() && !target_names.contains(b.name))
                fail("tracked record '" + b.name + "' is not a spec target");
        }

        // Children lists mirror parent links and preorder timestamps increase.
        std::vector<std::size_t> seen_children(t.blocks.size(), 0);
        std::vector<block_id> stack{0};
        timestamp last = -1;
        std::size_t visited = 0;
        while (!stack.empty()) {
            auto id = stack.back();
            stack.pop_back();
            const auto& b = t.blocks[static_cast<std::size_t>(id)];
            ++visited;
            if (b.ts <= last) fail("timestamps are not increasing in depth-first order");
            last = b.ts;
            for (auto it = b.children.rbegin(); it != b.children.rend(); ++it) {
                if (*it <= 0 || *it >= static_cast<block_id>(t.blocks.size())) fail("child id out of range");
                if (t.blocks[static_cast<std::size_t>(*it)].parent != id) fail("child list disagrees with parent id");
                stack.push_back(*it);
            }
            if (b.type == block_type::loop) {
                int expected = 0;
                for (auto c : b.children) {
                    const auto& child = t.blocks[static_cast<std::size_t>(c)];
                    if (child.type == block_type::iteration && child.iteration != expected++)
                        fail("iteration indices must be consecutive from 0");
                }
            }
        }
        if (visited != t.blocks.size()) fail("block tree is not connected");

        // A tracked record's iteration equals that of its nearest enclosing iteration block.
        for (const auto& b : t.blocks) {
            if (b.type != block_type::tracked) continue;
            std::optional<int> expected;
            for (auto p = b.parent; p; p = t.blocks[static_cast<std::size_t>(*p)].parent) {
                const auto& anc = t.blocks[static_cast<std::size_t>(*p)];
                if (anc.type == block_type::iteration) {
                    expected = anc.iteration;
                    break;
                }
            }
            if (b.iteration != expected) fail("record " + std::to_string(b.id) + " has the wrong iteration index");
        }

        std::set<std::int64_t> custom_ids;
        for (const auto& c : t.customs) {
            if (!custom_ids.insert(c.id).second) fail("duplicate custom record id");
            if (c.parent < 0 || c.parent >= static_cast<block_id>(t.blocks.size()))
                fail("custom record has an invalid parent");
            if (t.blocks[static_cast<std::size_t>(c.parent)].ts >= c.ts) fail("custom record precedes its parent");
        }
    }

}  // namespace tracescope
