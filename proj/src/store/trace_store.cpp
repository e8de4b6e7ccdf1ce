#include "tracescope/store/trace_store.hpp"

#include "sqlite.hpp"
#include "tracescope/error.hpp"

#include <algorithm>
#include <cmath>
#include <variant>

namespace tracescope::store {

    namespace {

        using param = std::variant<std::int64_t, double, std::string>;

        struct node {
            block_type type{block_type::root};
            std::optional<block_id> parent{};
            std::string name{};
            timestamp ts{};
            int depth{0};
            std::int64_t enter{};
            std::int64_t exit{};
        };

        [[noreturn]] void schema(const std::string& what) { throw error(error_code::schema_violation, what); }

        const char* schema_sql = R"sql(
CREATE TABLE meta(key TEXT PRIMARY KEY, value TEXT NOT NULL);
CREATE TABLE block(
    id INTEGER PRIMARY KEY, type TEXT NOT NULL, line INTEGER NOT NULL, ts INTEGER NOT NULL,
    parent_id INTEGER REFERENCES block(id), label TEXT NOT NULL, name TEXT NOT NULL,
    iteration INTEGER, aborted INTEGER NOT NULL, depth INTEGER NOT NULL,
    enter INTEGER NOT NULL, exit INTEGER NOT NULL);
CREATE TABLE tracked(
    id INTEGER PRIMARY KEY, name TEXT NOT NULL, line INTEGER NOT NULL, ts INTEGER NOT NULL,
    kind TEXT NOT NULL, value, text TEXT, parent_id INTEGER NOT NULL REFERENCES block(id),
    iteration INTEGER, is_variable INTEGER NOT NULL, label TEXT NOT NULL, aborted INTEGER NOT NULL,
    depth INTEGER NOT NULL, enter INTEGER NOT NULL);
CREATE TABLE function_name(block_id INTEGER PRIMARY KEY REFERENCES block(id), name TEXT NOT NULL);
CREATE TABLE for_loop(
    block_id INTEGER PRIMARY KEY REFERENCES block(id), loop_key TEXT NOT NULL,
    start_line INTEGER, end_line INTEGER, n_iterations INTEGER NOT NULL);
CREATE TABLE custom(
    id INTEGER PRIMARY KEY, label TEXT NOT NULL, line INTEGER NOT NULL, ts INTEGER NOT NULL,
    kind TEXT NOT NULL, value, text TEXT, parent_id INTEGER NOT NULL REFERENCES block(id),
    enter INTEGER NOT NULL);
)sql";

        const char* index_sql = R"sql(
CREATE INDEX tracked_name ON tracked(name, ts);
CREATE INDEX tracked_parent ON tracked(parent_id);
CREATE INDEX block_parent ON block(parent_id);
CREATE INDEX custom_label ON custom(label, ts);
CREATE INDEX custom_parent ON custom(parent_id);
)sql";

        // Columns shared by both halves of a block/tracked union, in this order:
        // src id type line ts parent_id label name iteration aborted kind value text is_variable depth enter exit
        const char* block_cols =
                "0, id, type, line, ts, parent_id, label, name, iteration, aborted, NULL, NULL, NULL, 0, depth, enter, exit";
        const char* tracked_cols =
                "1, id, 'tracked', line, ts, parent_id, label, name, iteration, aborted, kind, value, text, is_variable, "
                "depth, enter, enter";

        void bind_value(sql::statement& st, int kind_col, const value& v) {
            auto set = [&](const char* k) { st.bind(kind_col, k); };
            int vc = kind_col + 1;
            int tc = kind_col + 2;
            st.bind_null(vc).bind_null(tc);
            switch (v.kind) {
                case value_kind::none: set("n"); break;
                case value_kind::boolean:
                    set("b");
                    st.bind(vc, static_cast<std::int64_t>(v.b));
                    break;
                case value_kind::integer:
                    set("i");
                    st.bind(vc, v.i);
                    break;
                case value_kind::real:
                    set("f");
                    if (std::isfinite(v.d)) st.bind(vc, v.d);
                    else st.bind(tc, std::isnan(v.d) ? "nan" : (v.d > 0 ? "inf" : "-inf"));
                    break;
                case value_kind::string:
                    set("s");
                    st.bind(tc, v.s);
                    break;
                case value_kind::opaque:
                    set("r");
                    st.bind(tc, v.s);
                    break;
            }
        }

        value read_value(const sql::statement& st, int kind_col) {
            auto k = st.text(kind_col);
            int vc = kind_col + 1;
            int tc = kind_col + 2;
            if (k == "n") return value::none();
            if (k == "b") return value::boolean(st.i64(vc) != 0);
            if (k == "i") return value::integer(st.i64(vc));
            if (k == "f") {
                if (!st.is_null(vc)) return value::real(st.real(vc));
                auto t = st.text(tc);
                if (t == "nan") return value::real(std::nan(""));
                if (t == "inf") return value::real(INFINITY);
                if (t == "-inf") return value::real(-INFINITY);
                schema("bad real encoding '" + t + "'");
            }
            if (k == "s") return value::string(st.text(tc));
            if (k == "r") {
                value v;
                v.kind = value_kind::opaque;
                v.s = st.text(tc);
                return v;
            }
            schema("unknown value kind '" + k + "'");
        }

        std::string id_list(const std::set<std::int64_t>& ids) {
            std::string out;
            for (auto id : ids) {
                if (!out.empty()) out += ',';
                out += std::to_string(id);
            }
            return out;
        }

        std::string describe(const join_scope& s) {
            switch (s.kind) {
                case ancestor_kind::root: return "the root";
                case ancestor_kind::call: return "calls of '" + s.key + "'";
                case ancestor_kind::loop: return "instances of loop " + s.key;
                case ancestor_kind::iteration: return "iterations of loop " + s.key;
            }
            return "?";
        }

    }  // namespace

    struct trace_store::impl {
        sqlite3* db{nullptr};
        mutable std::mutex mu{};
        trace_spec spec{};
        static_info statics{};
        bool aborted{false};
        std::vector<node> nodes{};
        std::vector<std::string> names{};
        std::set<std::string> tracked_names{};
        std::set<std::string> custom_labels{};

        ~impl() {
            if (db) sqlite3_close(db);
        }

        void open_db(const std::string& path, int flags) {
            if (sqlite3_open_v2(path.c_str(), &db, flags | SQLITE_OPEN_FULLMUTEX, nullptr) != SQLITE_OK) {
                std::string msg = db ? sqlite3_errmsg(db) : "out of memory";
                throw error(error_code::io_error, "cannot open trace store '" + path + "': " + msg);
            }
        }

        void load();
        void write(const trace& t);

        std::vector<value_row> select(const std::string& stored, const value_filter& f) const;
        std::optional<block_id> instance_of(block_id start, const join_scope& s) const;
        std::optional<int> iteration_at(block_id start) const;
        const node& at(block_id id) const {
            if (id < 0 || id >= static_cast<block_id>(nodes.size()))
                throw error(error_code::unknown_block, "no block with id " + std::to_string(id));
            return nodes[static_cast<std::size_t>(id)];
        }
        block_row read_block(const sql::statement& st) const;
    };

    void trace_store::impl::write(const trace& t) {
        // Interval labels: preorder entry number and the largest entry number below.
        std::vector<std::int64_t> enter(t.blocks.size()), exit(t.blocks.size());
        std::vector<int> depth(t.blocks.size());
        std::int64_t counter = 0;
        std::vector<std::pair<block_id, bool>> stack{{0, false}};
        while (!stack.empty()) {
            auto [id, done] = stack.back();
            stack.pop_back();
            auto i = static_cast<std::size_t>(id);
            if (done) {
                exit[i] = counter - 1;
                continue;
            }
            enter[i] = counter++;
            stack.emplace_back(id, true);
            const auto& b = t.blocks[i];
            for (auto it = b.children.rbegin(); it != b.children.rend(); ++it) {
                depth[static_cast<std::size_t>(*it)] = depth[i] + 1;
                stack.emplace_back(*it, false);
            }
        }

        sql::exec(db, schema_sql);
        sql::exec(db, "BEGIN");
        sql::statement meta(db, "INSERT INTO meta(key, value) VALUES (?, ?)");
        meta.bind(1, "schema_version").bind(2, std::to_string(schema_version)).run();
        meta.bind(1, "trace_format_version").bind(2, std::to_string(trace_format_version)).run();
        meta.bind(1, "spec").bind(2, spec_to_json(t.spec).dump()).run();
        meta.bind(1, "static_info").bind(2, static_info_to_json(t.statics).dump()).run();
        meta.bind(1, "aborted").bind(2, t.aborted ? "1" : "0").run();

        sql::statement ins_block(db,
                                 "INSERT INTO block(id, type, line, ts, parent_id, label, name, iteration, aborted, "
                                 "depth, enter, exit) VALUES (?,?,?,?,?,?,?,?,?,?,?,?)");
        sql::statement ins_tracked(db,
                                   "INSERT INTO tracked(id, name, line, ts, kind, value, text, parent_id, iteration, "
                                   "is_variable, label, aborted, depth, enter) VALUES (?,?,?,?,?,?,?,?,?,?,?,?,?,?)");
        sql::statement ins_fn(db, "INSERT INTO function_name(block_id, name) VALUES (?, ?)");
        sql::statement ins_loop(db,
                                "INSERT INTO for_loop(block_id, loop_key, start_line, end_line, n_iterations) "
                                "VALUES (?,?,?,?,?)");
        for (std::size_t i = 0; i < t.blocks.size(); ++i) {
            const auto& b = t.blocks[i];
            if (b.type == block_type::tracked) {
                ins_tracked.bind(1, b.id).bind(2, b.name).bind(3, b.line).bind(4, b.ts);
                bind_value(ins_tracked, 5, b.val.value_or(value::none()));
                ins_tracked.bind(8, *b.parent).bind(9, b.iteration).bind(10, static_cast<int>(b.is_variable));
                ins_tracked.bind(11, b.label).bind(12, static_cast<int>(b.aborted)).bind(13, depth[i]);
                ins_tracked.bind(14, enter[i]).run();
                continue;
            }
            ins_block.bind(1, b.id).bind(2, to_string(b.type)).bind(3, b.line).bind(4, b.ts).bind(5, b.parent);
            ins_block.bind(6, b.label).bind(7, b.name).bind(8, b.iteration).bind(9, static_cast<int>(b.aborted));
            ins_block.bind(10, depth[i]).bind(11, enter[i]).bind(12, exit[i]).run();
            if (b.type == block_type::call) ins_fn.bind(1, b.id).bind(2, b.name).run();
            if (b.type == block_type::loop) {
                int iterations = 0;
                for (auto c : b.children)
                    if (t.blocks[static_cast<std::size_t>(c)].type == block_type::iteration) ++iterations;
                ins_loop.bind(1, b.id).bind(2, b.name);
                if (auto it = t.statics.loop_spans.find(b.name); it != t.statics.loop_spans.end())
                    ins_loop.bind(3, it->second.start_line).bind(4, it->second.end_line);
                ins_loop.bind(5, iterations).run();
            }
        }
        sql::statement ins_custom(db,
                                  "INSERT INTO custom(id, label, line, ts, kind, value, text, parent_id, enter) "
                                  "VALUES (?,?,?,?,?,?,?,?,?)");
        for (const auto& c : t.customs) {
            ins_custom.bind(1, c.id).bind(2, c.label).bind(3, c.line).bind(4, c.ts);
            bind_value(ins_custom, 5, c.val);
            ins_custom.bind(8, c.parent).bind(9, enter[static_cast<std::size_t>(c.parent)]).run();
        }
        sql::exec(db, index_sql);
        sql::exec(db, "COMMIT");
    }

    void trace_store::impl::load() {
        std::map<std::string, std::string> meta;
        try {
            sql::statement st(db, "SELECT key, value FROM meta");
            while (st.step()) meta[st.text(0)] = st.text(1);
        } catch (const error&) {
            schema("not a trace store: missing meta table");
        }
        if (meta["schema_version"] != std::to_string(schema_version))
            schema("unsupported store schema version '" + meta["schema_version"] + "'");
        try {
            spec = spec_from_json(nlohmann::ordered_json::parse(meta.at("spec")));
            statics = static_info_from_json(nlohmann::ordered_json::parse(meta.at("static_info")));
        } catch (const std::exception& e) {
            schema(std::string("corrupt store metadata: ") + e.what());
        }
        aborted = meta["aborted"] == "1";

        std::size_t total = 0;
        {
            sql::statement st(db, "SELECT (SELECT count(*) FROM block) + (SELECT count(*) FROM tracked)");
            st.step();
            total = static_cast<std::size_t>(st.i64(0));
        }
        nodes.assign(total, {});
        std::vector<bool> seen(total, false);
        sql::statement st(db, std::string("SELECT ") + block_cols + " FROM block UNION ALL SELECT " + tracked_cols +
                                      " FROM tracked");
        while (st.step()) {
            auto id = st.i64(1);
            if (id < 0 || static_cast<std::size_t>(id) >= total || seen[static_cast<std::size_t>(id)])
                schema("block ids are not dense");
            seen[static_cast<std::size_t>(id)] = true;
            auto& n = nodes[static_cast<std::size_t>(id)];
            auto type = block_type_from_string(st.text(2));
            if (!type) schema("unknown block type '" + st.text(2) + "'");
            n.type = *type;
            n.ts = st.i64(4);
            n.parent = st.opt_i64(5);
            n.name = st.text(7);
            n.depth = st.i32(14);
            n.enter = st.i64(15);
            n.exit = st.i64(16);
            if (n.parent && (*n.parent < 0 || static_cast<std::size_t>(*n.parent) >= total))
                schema("dangling parent id on block " + std::to_string(id));
        }
        if (total == 0 || nodes[0].type != block_type::root) schema("store has no root block");
        {
            sql::statement fk(db, "PRAGMA foreign_key_check");
            if (fk.step()) schema("foreign key violation in table " + fk.text(0));
        }

        for (const auto& target : spec.targets) names.push_back(target.name + "@" + target.scope);
        {
            sql::statement q(db, "SELECT DISTINCT name FROM tracked ORDER BY name");
            while (q.step()) tracked_names.insert(q.text(0));
        }
        for (const auto& n : tracked_names)
            if (std::find(names.begin(), names.end(), n) == names.end()) names.push_back(n);
        for (const auto& c : spec.customs) custom_labels.insert(c.label);
        {
            sql::statement q(db, "SELECT DISTINCT label FROM custom ORDER BY label");
            while (q.step()) custom_labels.insert(q.text(0));
        }
        for (const auto& c : spec.customs) names.push_back(c.label);
        for (const auto& l : custom_labels)
            if (std::find(names.begin(), names.end(), l) == names.end()) names.push_back(l);
    }

    std::optional<int> trace_store::impl::iteration_at(block_id start) const {
        for (std::optional<block_id> p = start; p; p = at(*p).parent) {
            if (at(*p).type != block_type::iteration) continue;
            sql::statement st(db, "SELECT iteration FROM block WHERE id = ?");
            st.bind(1, *p);
            if (st.step()) return st.opt_i32(0);
        }
        return std::nullopt;
    }

    std::vector<value_row> trace_store::impl::select(const std::string& stored, const value_filter& f) const {
        bool custom = custom_labels.contains(stored) && !tracked_names.contains(stored);
        std::string q = custom ? "SELECT id, label, line, ts, kind, value, text, parent_id, NULL, 0 FROM custom "
                                 "WHERE label = ?1"
                               : "SELECT id, name, line, ts, kind, value, text, parent_id, iteration, is_variable "
                                 "FROM tracked WHERE name = ?1";
        std::vector<param> params{stored};
        auto add = [&](const std::string& clause, param p) {
            params.push_back(std::move(p));
            auto idx = std::to_string(params.size());
            std::string c = clause;
            for (auto pos = c.find('$'); pos != std::string::npos; pos = c.find('$')) c.replace(pos, 1, "?" + idx);
            q += " AND " + c;
        };
        if (f.min || f.max) q += " AND kind IN ('i', 'f') AND value IS NOT NULL";
        if (f.min) add("value >= $", *f.min);
        if (f.max) add(f.max_exclusive ? "value < $" : "value <= $", *f.max);
        if (f.ts_from) add("ts >= $", *f.ts_from);
        if (f.ts_to) add("ts <= $", *f.ts_to);
        if (f.subtree) {
            const auto& r = at(*f.subtree);
            add("enter >= $", r.enter);
            add("enter <= $", r.exit);
        }
        if (f.ids) q += " AND id IN (" + id_list(*f.ids) + ")";
        q += " ORDER BY ts";

        std::lock_guard lock(mu);
        sql::statement st(db, q);
        for (std::size_t i = 0; i < params.size(); ++i) {
            int idx = static_cast<int>(i + 1);
            std::visit([&](const auto& v) { st.bind(idx, v); }, params[i]);
        }
        std::vector<value_row> out;
        while (st.step()) {
            value_row r;
            r.id = st.i64(0);
            r.name = st.text(1);
            r.line = st.i32(2);
            r.ts = st.i64(3);
            r.val = read_value(st, 4);
            r.parent = st.i64(7);
            r.iteration = st.opt_i32(8);
            r.is_variable = st.i64(9) != 0;
            r.is_custom = custom;
            r.block = custom ? r.parent : r.id;
            out.push_back(std::move(r));
        }
        if (custom)
            for (auto& r : out) r.iteration = iteration_at(r.parent);
        return out;
    }

    std::optional<block_id> trace_store::impl::instance_of(block_id start, const join_scope& s) const {
        for (std::optional<block_id> p = start; p; p = at(*p).parent) {
            const auto& n = at(*p);
            switch (s.kind) {
                case ancestor_kind::root:
                    if (n.type == block_type::root) return *p;
                    break;
                case ancestor_kind::call:
                    if (n.type == block_type::call && n.name == s.key) return *p;
                    break;
                case ancestor_kind::loop:
                    if (n.type == block_type::loop && n.name == s.key) return *p;
                    break;
                case ancestor_kind::iteration:
                    if (n.type == block_type::iteration && n.parent && at(*n.parent).name == s.key) return *p;
                    break;
            }
        }
        return std::nullopt;
    }

    block_row trace_store::impl::read_block(const sql::statement& st) const {
        block_row b;
        b.id = st.i64(1);
        b.type = *block_type_from_string(st.text(2));
        b.line = st.i32(3);
        b.ts = st.i64(4);
        b.parent = st.opt_i64(5);
        b.label = st.text(6);
        b.name = st.text(7);
        b.iteration = st.opt_i32(8);
        b.aborted = st.i64(9) != 0;
        if (st.i64(0) == 1) b.val = read_value(st, 10);
        b.depth = st.i32(14);
        b.enter = st.i64(15);
        b.exit = st.i64(16);
        return b;
    }

    trace_store::trace_store(std::unique_ptr<impl> p) : p_(std::move(p)) {}
    trace_store::trace_store(trace_store&&) noexcept = default;
    trace_store& trace_store::operator=(trace_store&&) noexcept = default;
    trace_store::~trace_store() = default;

    trace_store trace_store::ingest(const trace& t, const std::filesystem::path& path) {
        try {
            check_trace_invariants(t);
        } catch (const error& e) {
            schema(std::string("trace rejected: ") + e.what());
        }
        auto p = std::make_unique<impl>();
        bool memory = path == ":memory:";
        std::filesystem::path staging = memory ? path : std::filesystem::path(path.string() + ".partial");
        if (!memory) std::filesystem::remove(staging);
        p->open_db(staging.string(), SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE);
        sql::exec(p->db, "PRAGMA journal_mode = OFF; PRAGMA synchronous = OFF;");
        p->write(t);
        if (!memory) {
            sqlite3_close(p->db);
            p->db = nullptr;
            std::filesystem::rename(staging, path);
            p->open_db(path.string(), SQLITE_OPEN_READONLY);
        }
        p->load();
        trace_store s(std::move(p));
        auto c = s.counts();
        std::size_t tracked = 0;
        for (const auto& b : t.blocks) tracked += b.type == block_type::tracked;
        if (c.blocks != t.blocks.size() - tracked || c.tracked != tracked || c.customs != t.customs.size())
            schema("row counts do not match the trace");
        return s;
    }

    trace_store trace_store::open(const std::filesystem::path& path) {
        if (!std::filesystem::is_regular_file(path))
            throw error(error_code::io_error, "no trace store at '" + path.string() + "'");
        auto p = std::make_unique<impl>();
        p->open_db(path.string(), SQLITE_OPEN_READONLY);
        p->load();
        return trace_store(std::move(p));
    }

    trace trace_store::reconstruct() const {
        std::lock_guard lock(p_->mu);
        trace t;
        t.spec = p_->spec;
        t.statics = p_->statics;
        t.aborted = p_->aborted;
        t.blocks.resize(p_->nodes.size());

        auto fill = [&](const sql::statement& st) -> block_record& {
            auto id = st.i64(1);
            auto& b = t.blocks.at(static_cast<std::size_t>(id));
            b.id = id;
            b.type = *block_type_from_string(st.text(2));
            b.line = st.i32(3);
            b.ts = st.i64(4);
            b.parent = st.opt_i64(5);
            b.label = st.text(6);
            b.name = st.text(7);
            b.iteration = st.opt_i32(8);
            b.aborted = st.i64(9) != 0;
            if (st.i64(0) == 1) {
                b.val = read_value(st, 10);
                b.is_variable = st.i64(13) != 0;
            }
            return b;
        };
        {
            sql::statement root(p_->db, std::string("SELECT ") + block_cols + " FROM block WHERE parent_id IS NULL");
            if (!root.step()) schema("store has no root block");
            fill(root);
        }
        // Breadth-first: ask for the children of every block reached so far.
        sql::statement kids(p_->db, std::string("SELECT ") + block_cols + " FROM block WHERE parent_id = ?1 UNION ALL SELECT " +
                                            tracked_cols + " FROM tracked WHERE parent_id = ?1 ORDER BY 5");
        std::vector<block_id> frontier{0};
        std::size_t reached = 1;
        while (!frontier.empty()) {
            std::vector<block_id> next;
            for (auto id : frontier) {
                kids.bind(1, id);
                while (kids.step()) {
                    auto& c = fill(kids);
                    t.blocks[static_cast<std::size_t>(id)].children.push_back(c.id);
                    next.push_back(c.id);
                    ++reached;
                }
                kids.reset();
            }
            frontier = std::move(next);
        }
        if (reached != t.blocks.size()) schema("block tree is not connected");

        sql::statement cs(p_->db, "SELECT id, label, line, ts, kind, value, text, parent_id FROM custom ORDER BY id");
        while (cs.step()) {
            custom_record c;
            c.id = cs.i64(0);
            c.label = cs.text(1);
            c.line = cs.i32(2);
            c.ts = cs.i64(3);
            c.val = read_value(cs, 4);
            c.parent = cs.i64(7);
            t.customs.push_back(std::move(c));
        }
        return t;
    }

    table_counts trace_store::counts() const {
        std::lock_guard lock(p_->mu);
        sql::statement st(p_->db,
                          "SELECT (SELECT count(*) FROM block), (SELECT count(*) FROM tracked), "
                          "(SELECT count(*) FROM function_name), (SELECT count(*) FROM for_loop), "
                          "(SELECT count(*) FROM custom)");
        st.step();
        return {static_cast<std::size_t>(st.i64(0)), static_cast<std::size_t>(st.i64(1)),
                static_cast<std::size_t>(st.i64(2)), static_cast<std::size_t>(st.i64(3)),
                static_cast<std::size_t>(st.i64(4))};
    }

    const trace_spec& trace_store::spec() const { return p_->spec; }
    const static_info& trace_store::statics() const { return p_->statics; }
    bool trace_store::aborted() const { return p_->aborted; }
    std::vector<std::string> trace_store::names() const { return p_->names; }

    std::string trace_store::resolve_name(const std::string& name) const {
        if (std::find(p_->names.begin(), p_->names.end(), name) != p_->names.end()) return name;
        std::vector<std::string> matches;
        for (const auto& t : p_->spec.targets)
            if (t.name == name) matches.push_back(t.name + "@" + t.scope);
        if (matches.empty()) {
            for (const auto& n : p_->tracked_names) {
                auto at = n.rfind('@');
                if (at != std::string::npos && n.substr(0, at) == name) matches.push_back(n);
            }
        }
        if (matches.size() == 1) return matches.front();
        if (matches.empty()) throw error(error_code::unknown_name, "'" + name + "' is not tracked in this trace");
        std::string list;
        for (const auto& m : matches) list += (list.empty() ? "" : ", ") + m;
        throw error(error_code::unknown_name, "'" + name + "' is ambiguous: " + list);
    }

    std::vector<value_row> trace_store::select_values(const std::string& name, const value_filter& filter) const {
        return p_->select(resolve_name(name), filter);
    }

    joined trace_store::join_values(const std::vector<std::string>& names, const std::optional<join_scope>& scope,
                                    const std::map<std::string, value_filter>& filters) const {
        if (names.empty()) throw error(error_code::invalid_argument, "join needs at least one name");
        std::vector<std::string> resolved;
        std::vector<std::string> distinct;
        std::map<std::string, std::vector<value_row>> rows;
        // Ids passing each name's filter; matching uses every record so a
        // filter drops whole tuples instead of breaking the pairing.
        std::map<std::string, std::set<std::int64_t>> kept;
        for (const auto& n : names) {
            auto r = resolve_name(n);
            resolved.push_back(r);
            if (rows.contains(r)) continue;
            distinct.push_back(r);
            rows[r] = select_values(r);
            const value_filter* f = nullptr;
            if (auto it = filters.find(n); it != filters.end()) f = &it->second;
            else if (auto it2 = filters.find(r); it2 != filters.end()) f = &it2->second;
            if (f && !f->empty()) {
                auto& ids = kept[r];
                for (const auto& row : select_values(r, *f)) ids.insert(row.id);
            }
        }
        auto passes = [&](const value_row& row, const std::string& n) {
            auto it = kept.find(n);
            return it == kept.end() || it->second.contains(row.id);
        };

        joined out;
        out.names = resolved;
        if (distinct.size() == 1) {
            // A name joined with itself pairs each record with itself.
            out.scope = scope.value_or(join_scope{});
            for (const auto& r : rows[distinct[0]]) {
                if (!passes(r, distinct[0])) continue;
                out.instances.push_back(r.block);
                out.tuples.emplace_back(resolved.size(), r);
            }
            return out;
        }

        struct attempt {
            bool ok{false};
            std::string why{};
            std::map<block_id, std::map<std::string, std::vector<const value_row*>>> by_instance{};
        };
        auto try_scope = [&](const join_scope& s) {
            attempt a;
            for (const auto& n : distinct) {
                for (const auto& r : rows[n]) {
                    // Records outside every instance are not part of the join.
                    if (auto inst = p_->instance_of(r.parent, s)) a.by_instance[*inst][n].push_back(&r);
                }
            }
            for (const auto& [inst, per_name] : a.by_instance) {
                auto count = [&](const std::string& n) {
                    auto it = per_name.find(n);
                    return it == per_name.end() ? std::size_t{0} : it->second.size();
                };
                for (std::size_t k = 0; k < distinct.size(); ++k) {
                    if (count(distinct[k]) == 1) continue;
                    const auto& other = distinct[k == 0 ? 1 : k];
                    a.why = "'" + distinct[0] + "' and '" + other + "' do not have 1-1 instances within " + describe(s) +
                            ": block " + std::to_string(inst) + " holds " + std::to_string(count(distinct[0])) +
                            " vs " + std::to_string(count(other));
                    return a;
                }
            }
            a.ok = true;
            return a;
        };

        std::vector<join_scope> candidates;
        if (scope) {
            candidates.push_back(*scope);
        } else {
            // Every ancestor structure of any record is a candidate; those
            // covering more records come first, deeper ones break ties.
            std::vector<std::pair<join_scope, int>> found;
            for (const auto& n : distinct) {
                for (const auto& r : rows[n]) {
                    int depth = 0;
                    for (std::optional<block_id> p = r.parent; p; p = p_->at(*p).parent, --depth) {
                        const auto& nd = p_->at(*p);
                        join_scope s;
                        switch (nd.type) {
                            case block_type::root: s = {ancestor_kind::root, ""}; break;
                            case block_type::call: s = {ancestor_kind::call, nd.name}; break;
                            case block_type::loop: s = {ancestor_kind::loop, nd.name}; break;
                            case block_type::iteration: s = {ancestor_kind::iteration, p_->at(*nd.parent).name}; break;
                            case block_type::tracked: continue;
                        }
                        auto it = std::find_if(found.begin(), found.end(), [&](const auto& f) { return f.first == s; });
                        if (it == found.end()) found.emplace_back(s, depth);
                    }
                }
            }
            if (found.empty()) {
                out.scope = {};
                return out;
            }
            std::vector<std::tuple<std::size_t, int, std::size_t>> ranked;
            for (std::size_t i = 0; i < found.size(); ++i) {
                std::size_t covered = 0;
                for (const auto& n : distinct)
                    for (const auto& r : rows[n]) covered += p_->instance_of(r.parent, found[i].first).has_value();
                ranked.emplace_back(covered, found[i].second, i);
            }
            std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
                if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
                if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) > std::get<1>(b);
                return std::get<2>(a) < std::get<2>(b);
            });
            for (const auto& [covered, depth, i] : ranked) candidates.push_back(found[i].first);
        }
        std::string first_failure;
        for (const auto& s : candidates) {
            auto a = try_scope(s);
            if (!a.ok) {
                if (first_failure.empty()) first_failure = a.why;
                continue;
            }
            out.scope = s;
            std::vector<std::pair<timestamp, block_id>> order;
            for (const auto& [inst, _] : a.by_instance) order.emplace_back(p_->at(inst).ts, inst);
            std::sort(order.begin(), order.end());
            for (const auto& [ts, inst] : order) {
                std::vector<value_row> tuple;
                bool keep = true;
                for (const auto& n : resolved) {
                    tuple.push_back(*a.by_instance[inst][n].front());
                    keep = keep && passes(tuple.back(), n);
                }
                if (!keep) continue;
                out.instances.push_back(inst);
                out.tuples.push_back(std::move(tuple));
            }
            return out;
        }
        throw error(error_code::incompatible, first_failure);
    }

    std::vector<value_group> trace_store::group_values(const std::string& name, const splitter& by,
                                                       const value_filter& filter, std::size_t cap) const {
        auto rows = select_values(name, filter);
        std::map<std::string, value_group> groups;
        std::vector<std::pair<timestamp, std::string>> first_seen;
        auto put = [&](const std::string& key, std::optional<block_id> blk, const value_row& r) {
            auto [it, fresh] = groups.try_emplace(key);
            if (fresh) {
                it->second.key = key;
                it->second.block = blk;
                first_seen.emplace_back(r.ts, key);
            }
            it->second.rows.push_back(r);
        };

        if (by.kind == splitter_kind::variable) {
            // The splitter's value for a row: its latest record in the same
            // block before the row, else its first one after it there, else
            // its latest record anywhere earlier.
            auto splitter_rows = select_values(by.key);
            std::map<block_id, std::vector<const value_row*>> by_parent;
            for (const auto& sr : splitter_rows) by_parent[sr.parent].push_back(&sr);
            for (const auto& r : rows) {
                const value_row* pick = nullptr;
                if (auto it = by_parent.find(r.parent); it != by_parent.end()) {
                    for (const auto* sr : it->second) {
                        if (sr->ts < r.ts) pick = sr;
                        else if (!pick) {
                            pick = sr;
                            break;
                        } else break;
                    }
                }
                if (!pick) {
                    auto it = std::lower_bound(splitter_rows.begin(), splitter_rows.end(), r.ts,
                                               [](const value_row& sr, timestamp ts) { return sr.ts < ts; });
                    if (it != splitter_rows.begin()) pick = &*std::prev(it);
                }
                put(pick ? pick->val.to_display() : "<unset>", std::nullopt, r);
            }
        } else {
            join_scope s;
            if (by.kind == splitter_kind::loop || by.kind == splitter_kind::iteration) s.kind = ancestor_kind::loop;
            else s.kind = ancestor_kind::call;
            s.key = by.key;
            // Ordinal of each instance among all instances of the same structure.
            std::map<block_id, std::size_t> ordinal;
            {
                std::vector<std::pair<timestamp, block_id>> all;
                auto want = s.kind == ancestor_kind::loop ? block_type::loop : block_type::call;
                for (std::size_t i = 0; i < p_->nodes.size(); ++i)
                    if (p_->nodes[i].type == want && p_->nodes[i].name == by.key)
                        all.emplace_back(p_->nodes[i].ts, static_cast<block_id>(i));
                std::sort(all.begin(), all.end());
                for (std::size_t k = 0; k < all.size(); ++k) ordinal[all[k].second] = k;
            }
            for (const auto& r : rows) {
                if (by.kind == splitter_kind::iteration) {
                    auto inst = p_->instance_of(r.parent, {ancestor_kind::iteration, by.key});
                    if (!inst) {
                        put("<outside>", std::nullopt, r);
                        continue;
                    }
                    sql::statement st(p_->db, "SELECT iteration FROM block WHERE id = ?");
                    st.bind(1, *inst);
                    st.step();
                    put("iteration " + std::to_string(st.i64(0)), std::nullopt, r);
                    continue;
                }
                auto inst = p_->instance_of(r.parent, s);
                if (!inst) put("<outside>", std::nullopt, r);
                else put(by.key + " #" + std::to_string(ordinal[*inst]), *inst, r);
            }
        }
        if (groups.size() > cap)
            throw error(error_code::too_many_groups, "splitting '" + name + "' gives " + std::to_string(groups.size()) +
                                                             " groups, more than the cap of " + std::to_string(cap));
        std::sort(first_seen.begin(), first_seen.end());
        std::vector<value_group> out;
        for (const auto& [ts, key] : first_seen) out.push_back(std::move(groups[key]));
        return out;
    }

    subtree_result trace_store::subtree_values(const std::string& name, block_id root, bool include_parent_context) const {
        auto stored = resolve_name(name);
        const auto& r = p_->at(root);
        subtree_result out;
        value_filter f;
        f.subtree = root;
        out.rows = p_->select(stored, f);
        if (include_parent_context && r.parent) {
            f.subtree = *r.parent;
            std::set<std::int64_t> primary;
            for (const auto& row : out.rows) primary.insert(row.id);
            for (auto& row : p_->select(stored, f))
                if (!primary.contains(row.id)) out.context.push_back(std::move(row));
        }
        return out;
    }

    std::set<block_id> trace_store::blocks_for_values(const std::set<std::int64_t>& row_ids,
                                                      const std::optional<std::string>& name) const {
        std::set<block_id> out;
        if (row_ids.empty()) return out;
        std::string q = "SELECT id FROM tracked WHERE id IN (" + id_list(row_ids) + ")";
        std::optional<std::string> stored;
        if (name) {
            stored = resolve_name(*name);
            bool custom = p_->custom_labels.contains(*stored) && !p_->tracked_names.contains(*stored);
            q = custom ? "SELECT parent_id FROM custom WHERE label = ?1 AND id IN (" + id_list(row_ids) + ")"
                       : q + " AND name = ?1";
        }
        std::lock_guard lock(p_->mu);
        sql::statement st(p_->db, q);
        if (stored) st.bind(1, *stored);
        while (st.step()) out.insert(st.i64(0));
        return out;
    }

    std::vector<value_row> trace_store::values_for_blocks(const std::set<block_id>& blocks,
                                                          const std::string& name) const {
        std::vector<std::pair<std::int64_t, std::int64_t>> spans;
        for (auto b : blocks)
            if (has_block(b)) spans.emplace_back(p_->at(b).enter, p_->at(b).exit);
        std::vector<value_row> out;
        if (spans.empty()) return out;
        std::sort(spans.begin(), spans.end());
        std::vector<std::pair<std::int64_t, std::int64_t>> merged;
        for (const auto& sp : spans) {
            if (!merged.empty() && sp.first <= merged.back().second) merged.back().second = std::max(merged.back().second, sp.second);
            else merged.push_back(sp);
        }
        for (auto& r : select_values(name)) {
            auto e = p_->at(r.block).enter;
            auto it = std::upper_bound(merged.begin(), merged.end(), std::make_pair(e, INT64_MAX));
            if (it != merged.begin() && std::prev(it)->second >= e) out.push_back(std::move(r));
        }
        return out;
    }

    bool trace_store::has_block(block_id id) const { return id >= 0 && id < static_cast<block_id>(p_->nodes.size()); }

    block_row trace_store::block(block_id id) const {
        p_->at(id);
        std::lock_guard lock(p_->mu);
        sql::statement st(p_->db, std::string("SELECT ") + block_cols + " FROM block WHERE id = ?1 UNION ALL SELECT " +
                                          tracked_cols + " FROM tracked WHERE id = ?1");
        st.bind(1, id);
        if (!st.step()) throw error(error_code::unknown_block, "no block with id " + std::to_string(id));
        return p_->read_block(st);
    }

    std::vector<block_row> trace_store::children(block_id id) const {
        p_->at(id);
        std::lock_guard lock(p_->mu);
        sql::statement st(p_->db, std::string("SELECT ") + block_cols + " FROM block WHERE parent_id = ?1 UNION ALL SELECT " +
                                          tracked_cols + " FROM tracked WHERE parent_id = ?1 ORDER BY 5");
        st.bind(1, id);
        std::vector<block_row> out;
        while (st.step()) out.push_back(p_->read_block(st));
        return out;
    }

    std::vector<block_row> trace_store::subtree_blocks(block_id root, int depth) const {
        const auto& r = p_->at(root);
        std::lock_guard lock(p_->mu);
        sql::statement st(p_->db, std::string("SELECT ") + block_cols +
                                          " FROM block WHERE enter BETWEEN ?1 AND ?2 AND depth <= ?3 UNION ALL SELECT " +
                                          tracked_cols +
                                          " FROM tracked WHERE enter BETWEEN ?1 AND ?2 AND depth <= ?3 ORDER BY 16");
        st.bind(1, r.enter).bind(2, r.exit).bind(3, r.depth + std::max(depth, 0));
        std::vector<block_row> out;
        while (st.step()) out.push_back(p_->read_block(st));
        return out;
    }

    std::vector<std::size_t> trace_store::depth_histogram() const {
        std::vector<std::size_t> out;
        for (const auto& n : p_->nodes) {
            auto d = static_cast<std::size_t>(n.depth);
            if (out.size() <= d) out.resize(d + 1, 0);
            ++out[d];
        }
        return out;
    }

    int trace_store::loop_iterations(block_id loop) const {
        std::lock_guard lock(p_->mu);
        sql::statement st(p_->db, "SELECT n_iterations FROM for_loop WHERE block_id = ?");
        st.bind(1, loop);
        if (!st.step()) throw error(error_code::unknown_block, "block " + std::to_string(loop) + " is not a loop");
        return st.i32(0);
    }

    std::string trace_store::select_sql() {
        return "SELECT id, name, line, ts, kind, value, text, parent_id, iteration, is_variable FROM tracked "
               "WHERE name = ? ORDER BY ts";
    }

    std::string_view to_string(splitter_kind k) {
        switch (k) {
            case splitter_kind::loop: return "loop";
            case splitter_kind::iteration: return "iteration";
            case splitter_kind::call: return "call";
            case splitter_kind::variable: return "variable";
        }
        return "loop";
    }

    std::optional<splitter_kind> splitter_kind_from_string(std::string_view s) {
        for (auto k : {splitter_kind::loop, splitter_kind::iteration, splitter_kind::call, splitter_kind::variable})
            if (to_string(k) == s) return k;
        return std::nullopt;
    }

    std::string_view to_string(ancestor_kind k) {
        switch (k) {
            case ancestor_kind::root: return "root";
            case ancestor_kind::call: return "call";
            case ancestor_kind::loop: return "loop";
            case ancestor_kind::iteration: return "iteration";
        }
        return "root";
    }

    std::optional<ancestor_kind> ancestor_kind_from_string(std::string_view s) {
        for (auto k : {ancestor_kind::root, ancestor_kind::call, ancestor_kind::loop, ancestor_kind::iteration})
            if (to_string(k) == s) return k;
        return std::nullopt;
    }

}  // namespace tracescope::store
