#pragma once

#include "tracescope/error.hpp"
#include "tracescope/service/runner.hpp"
#include "tracescope/static_info.hpp"
#include "tracescope/store/plot.hpp"
#include "tracescope/store/trace_store.hpp"
#include "tracescope/trace_spec.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace tracescope::service {

    enum class session_status { editing, tracing, ready, failed };

    std::string_view to_string(session_status s);

    struct service_config {
        run_config run{};
        // Appended to every spec's exclusions.
        std::vector<std::string> exclusions{};
        std::size_t group_cap{store::default_group_cap};
        int tree_depth{6};
        // Traces are kept in memory unless a directory is given.
        std::optional<std::filesystem::path> trace_dir{};
    };

    // Reads a JSON config file; absent keys keep their defaults.
    service_config load_config(const std::filesystem::path& path);
    service_config config_from_json(const nlohmann::ordered_json& j);
    nlohmann::ordered_json config_to_json(const service_config& c);

    struct trace_outcome {
        int exit_code{0};
        bool timed_out{false};
        bool aborted{false};
        std::optional<std::string> uncaught{};
        std::string out{};
        std::string err{};
        std::chrono::milliseconds elapsed{};
        store::table_counts counts{};
    };

    struct session_info {
        std::string id{};
        session_status status{session_status::editing};
        std::uint64_t version{0};
        std::string entry{};
        std::vector<std::string> files{};
        trace_spec spec{};
        bool has_trace{false};
        std::optional<trace_outcome> last_run{};
        // Code and message of the last failed run.
        std::optional<std::pair<error_code, std::string>> failure{};
    };

    struct tree_window {
        block_id root{0};
        int depth{0};
        // Zoom root's ancestors, outermost first.
        std::vector<block_id> path{};
        // Preorder blocks of the window.
        std::vector<store::block_row> blocks{};
        // Window blocks whose children lie beyond the window.
        std::set<block_id> truncated{};
        // Block count per absolute depth of the whole tree.
        std::vector<std::size_t> minimap{};
    };

    struct deps_result {
        block_id block{};
        qualified_name variable{};
        std::set<qualified_name> closure{};
        std::set<block_id> blocks{};
    };

    struct span_result {
        block_id block{};
        block_type type{block_type::root};
        // Where the block happens: call site, loop header or assignment.
        source_span site{};
        // The called function's definition for call blocks.
        std::optional<source_span> function{};
        std::optional<std::string> function_name{};
    };

    struct trackable {
        qualified_name name{};
        symbol_kind kind{symbol_kind::variable};
        source_span binding{};
    };

    /// Owns the sessions. Every method is thread-safe; run_trace is exclusive
    /// per session while reads keep using the previous trace.
    class session_manager {
    public:
        explicit session_manager(service_config config = {});
        ~session_manager();
        session_manager(const session_manager&) = delete;
        session_manager& operator=(const session_manager&) = delete;

        const service_config& config() const { return config_; }

        // Throws InvalidArgument for an empty bundle and ParseError when the entry does not parse.
        std::string create_session(source_bundle bundle);
        void delete_session(const std::string& id);
        std::vector<std::string> list_sessions() const;
        session_info info(const std::string& id) const;

        // Validates against the current source and replaces the spec. Returns
        // the validated spec and the new version. Drops any trace.
        std::pair<trace_spec, std::uint64_t> update_spec(const std::string& id, const trace_spec& spec);

        // Replaces one source file. The trace is invalidated and targets that
        // no longer resolve are dropped; their messages are returned.
        std::vector<std::string> update_source(const std::string& id, const std::string& file, const std::string& text);

        // Runs the subject. Timeouts and crashes after recording began leave a
        // ready session holding the partial, aborted trace. Other failures
        // mark the session failed and rethrow.
        trace_outcome run_trace(const std::string& id);

        tree_window get_tree(const std::string& id, std::optional<block_id> root = {},
                             std::optional<int> depth = {}) const;
        store::plot_payload get_plot(const std::string& id, store::plot_query query) const;
        deps_result get_deps(const std::string& id, block_id block) const;
        span_result get_source_span(const std::string& id, block_id block) const;
        std::vector<trackable> list_trackables(const std::string& id) const;
        std::vector<std::string> names(const std::string& id) const;
        std::vector<store::value_row> values(const std::string& id, const std::string& name,
                                             const store::value_filter& filter = {}) const;

        // The trace store of a session with a trace. Throws InvalidState otherwise.
        std::shared_ptr<const store::trace_store> trace_of(const std::string& id) const;

    private:
        struct session;
        std::shared_ptr<session> find(const std::string& id) const;

        service_config config_;
        mutable std::mutex mutex_;
        std::map<std::string, std::shared_ptr<session>> sessions_;
        std::uint64_t next_id_{1};
    };

    nlohmann::ordered_json info_to_json(const session_info& s);
    nlohmann::ordered_json outcome_to_json(const trace_outcome& o);
    nlohmann::ordered_json tree_to_json(const tree_window& t);
    nlohmann::ordered_json block_to_json(const store::block_row& b);
    nlohmann::ordered_json deps_to_json(const deps_result& d);
    nlohmann::ordered_json span_result_to_json(const span_result& s);
    nlohmann::ordered_json trackables_to_json(const std::vector<trackable>& t);
    nlohmann::ordered_json bundle_to_json(const source_bundle& b);
    source_bundle bundle_from_json(const nlohmann::ordered_json& j);

}  // namespace tracescope::service
