#pragma once

#include "tracescope/trace.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace tracescope::store {

    inline constexpr int schema_version = 1;
    inline constexpr std::size_t default_group_cap = 50;

    /// One tracked record or custom-expression evaluation.
    ///
    /// For tracked records `block` equals `id` (records are tree leaves); for
    /// custom rows it is the block that hosted the evaluation.
    struct value_row {
        std::int64_t id{};
        std::string name{};
        int line{0};
        timestamp ts{};
        value val{};
        block_id parent{};
        block_id block{};
        std::optional<int> iteration{};
        bool is_variable{false};
        bool is_custom{false};

        friend bool operator==(const value_row&, const value_row&) = default;
    };

    // Conjunctive row filter. The value range applies to numeric rows only;
    // NaN and non-numeric rows never satisfy a range.
    struct value_filter {
        std::optional<double> min{};
        std::optional<double> max{};
        // When set, the upper bound is exclusive.
        bool max_exclusive{false};
        std::optional<std::set<std::int64_t>> ids{};
        std::optional<block_id> subtree{};
        std::optional<timestamp> ts_from{};
        std::optional<timestamp> ts_to{};

        bool empty() const { return !min && !max && !ids && !subtree && !ts_from && !ts_to; }
    };

    enum class splitter_kind { loop, iteration, call, variable };

    // What to split rows by: instances of a loop (by loop key), iterations of
    // a loop, invocations of a function, or the latest value of another name.
    struct splitter {
        splitter_kind kind{splitter_kind::loop};
        std::string key{};
    };

    struct value_group {
        std::string key{};
        // The block that defines the group, when structural.
        std::optional<block_id> block{};
        std::vector<value_row> rows{};
    };

    // How join partners are matched: records sharing one instance of the
    // ancestor are joined when every name has exactly one record there.
    enum class ancestor_kind { root, call, loop, iteration };

    struct join_scope {
        ancestor_kind kind{ancestor_kind::root};
        // Function name for calls, loop key for loops and iterations.
        std::string key{};

        friend bool operator==(const join_scope&, const join_scope&) = default;
    };

    struct joined {
        join_scope scope{};
        std::vector<std::string> names{};
        // The instance block of each tuple (the root for root scope).
        std::vector<block_id> instances{};
        std::vector<std::vector<value_row>> tuples{};
    };

    struct subtree_result {
        std::vector<value_row> rows{};
        std::vector<value_row> context{};
    };

    // A block row as stored, with its interval label.
    struct block_row {
        block_id id{};
        block_type type{block_type::root};
        int line{0};
        timestamp ts{};
        std::optional<block_id> parent{};
        std::string label{};
        std::string name{};
        std::optional<int> iteration{};
        bool aborted{false};
        int depth{0};
        std::int64_t enter{};
        std::int64_t exit{};
        std::optional<value> val{};
    };

    struct table_counts {
        std::size_t blocks{};
        std::size_t tracked{};
        std::size_t functions{};
        std::size_t loops{};
        std::size_t customs{};
    };

    /// Relational form of one trace in a single-file SQLite database.
    ///
    /// Ingest is the only writer. Afterwards every method is a read and the
    /// store may be shared between threads.
    class trace_store {
    public:
        // Path ":memory:" keeps the database in memory. An existing file is replaced.
        static trace_store ingest(const trace& t, const std::filesystem::path& path = ":memory:");
        static trace_store open(const std::filesystem::path& path);

        trace_store(trace_store&&) noexcept;
        trace_store& operator=(trace_store&&) noexcept;
        ~trace_store();

        // Rebuilds the hierarchy by repeatedly asking for the children of each block.
        trace reconstruct() const;

        table_counts counts() const;
        const trace_spec& spec() const;
        const static_info& statics() const;
        bool aborted() const;

        // Qualified tracked names and custom labels, in spec order.
        std::vector<std::string> names() const;
        // Maps "val" or "val@fib" or a custom label to the stored name. Throws UnknownName.
        std::string resolve_name(const std::string& name) const;

        std::vector<value_row> select_values(const std::string& name, const value_filter& filter = {}) const;
        joined join_values(const std::vector<std::string>& names, const std::optional<join_scope>& scope = {},
                           const std::map<std::string, value_filter>& filters = {}) const;
        std::vector<value_group> group_values(const std::string& name, const splitter& by,
                                              const value_filter& filter = {},
                                              std::size_t cap = default_group_cap) const;
        subtree_result subtree_values(const std::string& name, block_id root, bool include_parent_context) const;

        // Row ids are tracked-record ids, or custom ids when `name` is a custom label.
        std::set<block_id> blocks_for_values(const std::set<std::int64_t>& row_ids,
                                             const std::optional<std::string>& name = {}) const;
        // Rows of `name` located in or below any of `blocks`.
        std::vector<value_row> values_for_blocks(const std::set<block_id>& blocks, const std::string& name) const;

        block_row block(block_id id) const;
        bool has_block(block_id id) const;
        std::vector<block_row> children(block_id id) const;
        // Blocks in the subtree of `root` down to `depth` levels below it, in preorder.
        std::vector<block_row> subtree_blocks(block_id root, int depth) const;
        // Block count per absolute depth over the whole tree.
        std::vector<std::size_t> depth_histogram() const;
        // Iteration count of a loop block (from the for_loop table).
        int loop_iterations(block_id loop) const;

        // SQL text used for a name lookup, exposed for diagnostics.
        static std::string select_sql();

    private:
        struct impl;
        explicit trace_store(std::unique_ptr<impl> p);
        std::unique_ptr<impl> p_;
    };

    std::string_view to_string(splitter_kind k);
    std::optional<splitter_kind> splitter_kind_from_string(std::string_view s);
    std::string_view to_string(ancestor_kind k);
    std::optional<ancestor_kind> ancestor_kind_from_string(std::string_view s);

}  // namespace tracescope::store
