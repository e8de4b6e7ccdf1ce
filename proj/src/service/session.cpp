#include "tracescope/service/session.hpp"

#include "tracescope/deps/dependency.hpp"
#include "tracescope/error.hpp"
#include "tracescope/instrument/scopes.hpp"
#include "tracescope/instrument/validate.hpp"
#include "tracescope/python/parser.hpp"

#include <fstream>
#include <sstream>

namespace tracescope::service {

    namespace fs = std::filesystem;
    using json = nlohmann::ordered_json;

    std::string_view to_string(session_status s) {
        switch (s) {
            case session_status::editing: return "editing";
            case session_status::tracing: return "tracing";
            case session_status::ready: return "ready";
            case session_status::failed: return "failed";
        }
        return "editing";
    }

    struct session_manager::session {
        std::mutex m;
        std::string id;
        source_bundle bundle;
        trace_spec spec;
        std::uint64_t version{0};
        session_status status{session_status::editing};
        // During a run this still holds the previous trace, if any.
        std::shared_ptr<const store::trace_store> store;
        std::optional<trace_outcome> last_run;
        std::optional<std::pair<error_code, std::string>> failure;

        const std::string& entry_text() const { return bundle.files.at(bundle.entry); }

        void require_idle() const {
            if (status == session_status::tracing)
                throw error(error_code::invalid_state, "session " + id + " is tracing");
        }

        void invalidate() {
            status = session_status::editing;
            store.reset();
            last_run.reset();
            failure.reset();
        }
    };

    session_manager::session_manager(service_config config) : config_(std::move(config)) {}
    session_manager::~session_manager() = default;

    std::shared_ptr<session_manager::session> session_manager::find(const std::string& id) const {
        std::lock_guard lock(mutex_);
        auto it = sessions_.find(id);
        if (it == sessions_.end()) throw error(error_code::unknown_session, "no session '" + id + "'");
        return it->second;
    }

    std::string session_manager::create_session(source_bundle bundle) {
        if (bundle.files.empty()) throw error(error_code::invalid_argument, "the source bundle is empty");
        if (bundle.entry.empty() && bundle.files.size() == 1) bundle.entry = bundle.files.begin()->first;
        if (!bundle.files.contains(bundle.entry))
            throw error(error_code::invalid_argument, "the bundle has no entry file '" + bundle.entry + "'");
        for (const auto& [name, text] : bundle.files) {
            fs::path p(name);
            if (name.empty() || p.is_absolute() || p.lexically_normal().string().starts_with(".."))
                throw error(error_code::invalid_argument, "file path '" + name + "' escapes the bundle");
        }
        python::parse_module(bundle.files.at(bundle.entry));

        auto s = std::make_shared<session>();
        s->bundle = std::move(bundle);
        s->spec.subject_entry = s->bundle.entry;
        std::lock_guard lock(mutex_);
        s->id = "s" + std::to_string(next_id_++);
        sessions_[s->id] = s;
        return s->id;
    }

    void session_manager::delete_session(const std::string& id) {
        auto s = find(id);
        std::lock_guard slock(s->m);
        s->require_idle();
        std::lock_guard lock(mutex_);
        sessions_.erase(id);
    }

    std::vector<std::string> session_manager::list_sessions() const {
        std::lock_guard lock(mutex_);
        std::vector<std::string> out;
        for (const auto& [id, s] : sessions_) out.push_back(id);
        return out;
    }

    session_info session_manager::info(const std::string& id) const {
        auto s = find(id);
        std::lock_guard lock(s->m);
        session_info i;
        i.id = s->id;
        i.status = s->status;
        i.version = s->version;
        i.entry = s->bundle.entry;
        for (const auto& [name, text] : s->bundle.files) i.files.push_back(name);
        i.spec = s->spec;
        i.has_trace = s->store != nullptr;
        i.last_run = s->last_run;
        i.failure = s->failure;
        return i;
    }

    std::pair<trace_spec, std::uint64_t> session_manager::update_spec(const std::string& id, const trace_spec& spec) {
        auto s = find(id);
        std::lock_guard lock(s->m);
        s->require_idle();
        auto wanted = spec;
        wanted.subject_entry = s->bundle.entry;
        auto validated = instrument::validate_spec(wanted, s->entry_text(), s->bundle.entry).value();
        s->spec = validated;
        s->invalidate();
        return {validated, ++s->version};
    }

    std::vector<std::string> session_manager::update_source(const std::string& id, const std::string& file,
                                                            const std::string& text) {
        auto s = find(id);
        std::lock_guard lock(s->m);
        s->require_idle();
        if (!s->bundle.files.contains(file)) throw error(error_code::invalid_argument, "no file '" + file + "'");
        std::vector<std::string> dropped;
        if (file == s->bundle.entry) {
            auto r = instrument::validate_spec(s->spec, text, file);
            for (const auto& issue : r.issues) dropped.push_back(issue.message);
            s->spec = r.spec;
        }
        s->bundle.files[file] = text;
        s->invalidate();
        ++s->version;
        return dropped;
    }

    trace_outcome session_manager::run_trace(const std::string& id) {
        auto s = find(id);
        source_bundle bundle;
        trace_spec spec;
        std::uint64_t version = 0;
        {
            std::lock_guard lock(s->m);
            s->require_idle();
            bundle = s->bundle;
            spec = s->spec;
            version = s->version;
            s->status = session_status::tracing;
        }
        spec.exclusions.insert(spec.exclusions.end(), config_.exclusions.begin(), config_.exclusions.end());

        auto fail = [&](error_code code, const std::string& message) {
            std::lock_guard lock(s->m);
            s->status = session_status::failed;
            s->store.reset();
            s->last_run.reset();
            s->failure = {code, message};
        };
        try {
            auto r = run_traced(bundle, spec, config_.run);
            fs::path path = ":memory:";
            if (config_.trace_dir) {
                fs::create_directories(*config_.trace_dir);
                path = *config_.trace_dir / (s->id + "-v" + std::to_string(version) + ".trace.db");
            }
            auto st = std::make_shared<const store::trace_store>(store::trace_store::ingest(r.result, path));
            trace_outcome o;
            o.exit_code = r.exit_code;
            o.timed_out = r.timed_out;
            o.aborted = r.result.aborted;
            o.uncaught = r.uncaught;
            o.out = std::move(r.out);
            o.err = std::move(r.err);
            o.elapsed = r.elapsed;
            o.counts = st->counts();
            std::lock_guard lock(s->m);
            s->status = session_status::ready;
            s->store = std::move(st);
            s->last_run = o;
            s->failure.reset();
            return o;
        } catch (const error& e) {
            fail(e.code(), e.what());
            throw;
        } catch (const std::exception& e) {
            fail(error_code::io_error, e.what());
            throw;
        }
    }

    std::shared_ptr<const store::trace_store> session_manager::trace_of(const std::string& id) const {
        auto s = find(id);
        std::lock_guard lock(s->m);
        if (!s->store) throw error(error_code::invalid_state, "session " + id + " has no trace; run it first");
        return s->store;
    }

    tree_window session_manager::get_tree(const std::string& id, std::optional<block_id> root,
                                          std::optional<int> depth) const {
        auto st = trace_of(id);
        tree_window w;
        w.root = root.value_or(0);
        w.depth = depth.value_or(config_.tree_depth);
        if (w.depth < 0) throw error(error_code::invalid_argument, "depth must not be negative");
        auto top = st->block(w.root);
        for (auto p = top.parent; p; p = st->block(*p).parent) w.path.insert(w.path.begin(), *p);
        w.blocks = st->subtree_blocks(w.root, w.depth);
        for (const auto& b : w.blocks)
            if (b.depth == top.depth + w.depth && b.type != block_type::tracked && !st->children(b.id).empty())
                w.truncated.insert(b.id);
        w.minimap = st->depth_histogram();
        return w;
    }

    store::plot_payload session_manager::get_plot(const std::string& id, store::plot_query query) const {
        auto st = trace_of(id);
        return store::run_plot(*st, query);
    }

    deps_result session_manager::get_deps(const std::string& id, block_id block) const {
        auto st = trace_of(id);
        auto b = st->block(block);
        if (b.type != block_type::tracked)
            throw error(error_code::not_a_tracked_block, "block " + std::to_string(block) + " is not a tracked record");
        deps_result d;
        d.block = block;
        d.variable = qualified_name::parse(b.name);
        d.closure = deps::transitive_deps(st->statics(), d.variable);
        d.blocks = deps::runtime_deps(*st, d.closure, block);
        return d;
    }

    namespace {

        source_span line_span(const std::string& file, const std::string& text, int line) {
            std::istringstream in(text);
            std::string current;
            for (int n = 1; std::getline(in, current); ++n) {
                if (n != line) continue;
                auto first = current.find_first_not_of(" \t");
                int start = first == std::string::npos ? 0 : static_cast<int>(first);
                return {file, line, line, start, static_cast<int>(current.size())};
            }
            return {file, line, line, 0, 0};
        }

        source_span whole_file(const std::string& file, const std::string& text) {
            int lines = 0;
            std::size_t last_len = 0;
            std::istringstream in(text);
            for (std::string l; std::getline(in, l); ++lines) last_len = l.size();
            return {file, 1, std::max(lines, 1), 0, static_cast<int>(last_len)};
        }

    }  // namespace

    span_result session_manager::get_source_span(const std::string& id, block_id block) const {
        auto st = trace_of(id);
        auto b = st->block(block);
        std::string file, text;
        {
            auto s = find(id);
            std::lock_guard lock(s->m);
            file = s->bundle.entry;
            text = s->entry_text();
        }
        span_result r;
        r.block = block;
        r.type = b.type;
        const auto& statics = st->statics();
        switch (b.type) {
            case block_type::root: r.site = whole_file(file, text); break;
            case block_type::call: {
                r.site = line_span(file, text, b.line);
                auto fn = deps::called_function(statics, b);
                if (fn.scope == builtin_scope) break;
                auto path = scope_child(fn.scope, fn.name);
                r.function_name = path;
                if (auto it = statics.function_spans.find(path); it != statics.function_spans.end())
                    r.function = it->second;
                else if (auto ct = statics.class_spans.find(path); ct != statics.class_spans.end())
                    r.function = ct->second;
                break;
            }
            case block_type::loop:
            case block_type::iteration: {
                r.site = line_span(file, text, b.line);
                for (const auto& [key, span] : statics.loop_spans)
                    if (span.start_line == b.line) {
                        r.site = span;
                        break;
                    }
                break;
            }
            case block_type::tracked: r.site = line_span(file, text, b.line); break;
        }
        if (r.site.file.empty()) r.site.file = file;
        return r;
    }

    std::vector<trackable> session_manager::list_trackables(const std::string& id) const {
        std::string file, text;
        {
            auto s = find(id);
            std::lock_guard lock(s->m);
            file = s->bundle.entry;
            text = s->entry_text();
        }
        auto m = python::parse_module(text);
        auto scopes = instrument::scope_table::build(m, file);
        std::vector<trackable> out;
        for (const auto& node : scopes.scopes()) {
            if (!instrument::scope_table::trackable(node.type)) continue;
            for (const auto& name : node.bound) {
                if (node.globals.contains(name) || node.nonlocals.contains(name)) continue;
                auto it = node.kinds.find(name);
                auto kind = it == node.kinds.end() ? symbol_kind::variable : it->second;
                if (node.params.contains(name)) kind = symbol_kind::parameter;
                if (kind != symbol_kind::variable && kind != symbol_kind::parameter) continue;
                trackable t{{name, node.path}, kind, {}};
                if (auto pos = node.first_binding.find(name); pos != node.first_binding.end())
                    t.binding = {file, pos->second.line, pos->second.end_line, pos->second.col, pos->second.end_col};
                out.push_back(std::move(t));
            }
        }
        return out;
    }

    std::vector<std::string> session_manager::names(const std::string& id) const { return trace_of(id)->names(); }

    std::vector<store::value_row> session_manager::values(const std::string& id, const std::string& name,
                                                          const store::value_filter& filter) const {
        return trace_of(id)->select_values(name, filter);
    }

    service_config config_from_json(const json& j) {
        if (!j.is_object()) throw error(error_code::invalid_argument, "config must be a JSON object");
        service_config c;
        try {
            if (j.contains("python")) c.run.python = j.at("python").get<std::string>();
            if (j.contains("timeout_ms")) c.run.timeout = std::chrono::milliseconds(j.at("timeout_ms").get<std::int64_t>());
            if (j.contains("event_cap")) c.run.event_cap = j.at("event_cap").get<std::size_t>();
            if (j.contains("work_root")) c.run.work_root = j.at("work_root").get<std::string>();
            if (j.contains("exclusions")) c.exclusions = j.at("exclusions").get<std::vector<std::string>>();
            if (j.contains("group_cap")) c.group_cap = j.at("group_cap").get<std::size_t>();
            if (j.contains("tree_depth")) c.tree_depth = j.at("tree_depth").get<int>();
            if (j.contains("trace_dir")) c.trace_dir = j.at("trace_dir").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw error(error_code::invalid_argument, std::string("bad config: ") + e.what());
        }
        if (c.run.timeout.count() <= 0) throw error(error_code::invalid_argument, "timeout_ms must be positive");
        if (c.tree_depth < 0) throw error(error_code::invalid_argument, "tree_depth must not be negative");
        return c;
    }

    service_config load_config(const fs::path& path) {
        std::ifstream in(path);
        if (!in) throw error(error_code::io_error, "cannot read config " + path.string());
        json j;
        try {
            j = json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw error(error_code::invalid_argument, "config " + path.string() + " is not JSON: " + e.what());
        }
        return config_from_json(j);
    }

    json config_to_json(const service_config& c) {
        json j;
        j["python"] = c.run.python;
        j["timeout_ms"] = c.run.timeout.count();
        j["event_cap"] = c.run.event_cap;
        j["work_root"] = c.run.work_root.string();
        j["exclusions"] = c.exclusions;
        j["group_cap"] = c.group_cap;
        j["tree_depth"] = c.tree_depth;
        if (c.trace_dir) j["trace_dir"] = c.trace_dir->string();
        return j;
    }

    json outcome_to_json(const trace_outcome& o) {
        json j;
        j["exit_code"] = o.exit_code;
        j["timed_out"] = o.timed_out;
        j["aborted"] = o.aborted;
        j["uncaught"] = o.uncaught ? json(*o.uncaught) : json();
        j["stdout"] = o.out;
        j["stderr"] = o.err;
        j["elapsed_ms"] = o.elapsed.count();
        j["counts"] = {{"blocks", o.counts.blocks},
                       {"tracked", o.counts.tracked},
                       {"functions", o.counts.functions},
                       {"loops", o.counts.loops},
                       {"customs", o.counts.customs}};
        if (o.timed_out) j["error"] = {{"code", to_string(error_code::timeout)}, {"message", "wall-clock limit reached"}};
        return j;
    }

    json info_to_json(const session_info& s) {
        json j;
        j["id"] = s.id;
        j["status"] = to_string(s.status);
        j["version"] = s.version;
        j["entry"] = s.entry;
        j["files"] = s.files;
        j["spec"] = spec_to_json(s.spec);
        j["has_trace"] = s.has_trace;
        j["last_run"] = s.last_run ? outcome_to_json(*s.last_run) : json();
        j["failure"] = s.failure ? json{{"code", to_string(s.failure->first)}, {"message", s.failure->second}} : json();
        return j;
    }

    json block_to_json(const store::block_row& b) {
        json j;
        j["id"] = b.id;
        j["type"] = to_string(b.type);
        j["line"] = b.line;
        j["ts"] = b.ts;
        j["parent_id"] = b.parent ? json(*b.parent) : json();
        j["label"] = b.label;
        j["name"] = b.name;
        j["iteration"] = b.iteration ? json(*b.iteration) : json();
        j["aborted"] = b.aborted;
        j["depth"] = b.depth;
        j["enter"] = b.enter;
        j["exit"] = b.exit;
        j["value"] = b.val ? value_to_json(*b.val) : json();
        return j;
    }

    json tree_to_json(const tree_window& t) {
        json j;
        j["root"] = t.root;
        j["depth"] = t.depth;
        j["path"] = t.path;
        j["blocks"] = json::array();
        for (const auto& b : t.blocks) j["blocks"].push_back(block_to_json(b));
        j["truncated"] = t.truncated;
        j["minimap"] = t.minimap;
        return j;
    }

    json deps_to_json(const deps_result& d) {
        json j;
        j["block"] = d.block;
        j["variable"] = d.variable.str();
        j["closure"] = json::array();
        for (const auto& q : d.closure) j["closure"].push_back(q.str());
        j["blocks"] = d.blocks;
        return j;
    }

    json span_result_to_json(const span_result& s) {
        json j;
        j["block"] = s.block;
        j["type"] = to_string(s.type);
        j["site"] = span_to_json(s.site);
        j["function"] = s.function ? span_to_json(*s.function) : json();
        j["function_name"] = s.function_name ? json(*s.function_name) : json();
        return j;
    }

    json trackables_to_json(const std::vector<trackable>& ts) {
        json j = json::array();
        for (const auto& t : ts)
            j.push_back({{"name", t.name.name},
                         {"scope", t.name.scope},
                         {"qualified", t.name.str()},
                         {"kind", kind_name(t.kind)},
                         {"binding", span_to_json(t.binding)}});
        return j;
    }

    json bundle_to_json(const source_bundle& b) {
        json j;
        j["entry"] = b.entry;
        j["files"] = json::object();
        for (const auto& [name, text] : b.files) j["files"][name] = text;
        return j;
    }

    source_bundle bundle_from_json(const json& j) {
        if (!j.is_object()) throw error(error_code::invalid_argument, "source bundle must be an object");
        source_bundle b;
        try {
            b.entry = j.value("entry", std::string());
            if (j.contains("files")) b.files = j.at("files").get<std::map<std::string, std::string>>();
        } catch (const nlohmann::json::exception& e) {
            throw error(error_code::invalid_argument, std::string("bad source bundle: ") + e.what());
        }
        return b;
    }

}  // namespace tracescope::service
