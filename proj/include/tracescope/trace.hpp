#pragma once

#include "tracescope/static_info.hpp"
#include "tracescope/trace_spec.hpp"
#include "tracescope/value.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tracescope {

    using block_id = std::int64_t;
    using timestamp = std::int64_t;

    enum class block_type { root, call, loop, iteration, tracked };

    std::string_view to_string(block_type t);
    std::optional<block_type> block_type_from_string(std::string_view s);

    /// One node of the execution hierarchy.
    ///
    /// `name` is the callee for call blocks, the loop key for loop blocks and
    /// the target name for tracked blocks. `value`, `iteration` and
    /// `is_variable` are only meaningful on tracked blocks, although
    /// `iteration` is also set on iteration blocks.
    struct block_record {
        block_id id{};
        block_type type{block_type::root};
        int line{0};
        timestamp ts{};
        std::optional<block_id> parent{};
        std::string label{};
        std::string name{};
        std::optional<value> val{};
        std::optional<int> iteration{};
        bool is_variable{false};
        bool aborted{false};
        std::vector<block_id> children{};

        friend bool operator==(const block_record&, const block_record&) = default;
    };

    struct custom_record {
        std::int64_t id{};
        std::string label{};
        int line{0};
        timestamp ts{};
        value val{};
        block_id parent{};

        friend bool operator==(const custom_record&, const custom_record&) = default;
    };

    inline constexpr int trace_format_version = 1;

    /// A complete recorded execution. `blocks[i].id == i`; blocks[0] is root.
    struct trace {
        trace_spec spec{};
        std::vector<block_record> blocks{};
        std::vector<custom_record> customs{};
        static_info statics{};
        // Set when the subject did not reach a normal exit.
        bool aborted{false};

        const block_record& root() const { return blocks.front(); }
        const block_record& at(block_id id) const { return blocks.at(static_cast<std::size_t>(id)); }

        friend bool operator==(const trace&, const trace&) = default;
    };

    // A trace holding only the root block.
    trace make_empty_trace(trace_spec spec = {});

    // Throws error(malformed_trace) describing the first violated invariant.
    void check_trace_invariants(const trace& t);

}  // namespace tracescope
