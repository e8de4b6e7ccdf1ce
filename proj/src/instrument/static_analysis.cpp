#include "tracescope/instrument/static_analysis.hpp"

#include "tracescope/python/parser.hpp"
#include "tracescope/python/visit.hpp"

namespace tracescope::instrument {

    using python::expr;
    using python::expr_kind;
    using python::stmt;
    using python::stmt_kind;

    std::string loop_key(const python::position& pos) {
        return std::to_string(pos.line) + ":" + std::to_string(pos.col);
    }

    namespace {

        using name_set = std::set<qualified_name>;

        class dep_collector {
        public:
            dep_collector(const scope_table& scopes, static_info& out) : scopes_(scopes), out_(out) {}

            void body(const std::vector<stmt>& stmts, int s) {
                for (const auto& st : stmts) statement(st, s);
            }

            name_set expression(const expr& e, int s) {
                name_set out;
                loads(e, s, out);
                return out;
            }

        private:
            const scope_table& scopes_;
            static_info& out_;

            bool named_scope(const std::string& path) const {
                return path == builtin_scope || scopes_.find(path).has_value();
            }

            void add(const qualified_name& key, const name_set& deps) {
                auto& slot = out_.direct_deps[key];
                slot.insert(deps.begin(), deps.end());
            }

            void loads(const expr& e, int s, name_set& out) {
                switch (e.kind) {
                    case expr_kind::name: {
                        auto q = scopes_.resolve_load(s, e.text);
                        if (!named_scope(q.scope)) return;
                        if (q.scope == builtin_scope) out_.symbols.try_emplace(q, symbol_kind::builtin);
                        out.insert(std::move(q));
                        return;
                    }
                    case expr_kind::lambda: {
                        auto inner = scopes_.find_anonymous(e.pos).value_or(s);
                        for (const auto& p : e.items[0].items)
                            for (const auto& sub : p.items) loads(sub, s, out);
                        loads(e.items[1], inner, out);
                        return;
                    }
                    case expr_kind::list_comp:
                    case expr_kind::set_comp:
                    case expr_kind::generator:
                    case expr_kind::dict_comp: {
                        auto inner = scopes_.find_anonymous(e.pos).value_or(s);
                        std::size_t first_for = e.is(expr_kind::dict_comp) ? 2 : 1;
                        for (std::size_t i = 0; i < e.items.size(); ++i) {
                            if (i < first_for) {
                                loads(e.items[i], inner, out);
                                continue;
                            }
                            const auto& f = e.items[i];
                            loads(f.items[1], i == first_for ? s : inner, out);
                            for (std::size_t k = 2; k < f.items.size(); ++k) loads(f.items[k], inner, out);
                        }
                        return;
                    }
                    case expr_kind::named: {
                        name_set value_deps;
                        loads(e.items[1], s, value_deps);
                        int binder = s;
                        while (scopes_.at(binder).type == scope_type::comprehension) binder = scopes_.at(binder).parent;
                        add(scopes_.resolve_store(binder, e.items[0].text), value_deps);
                        out.insert(value_deps.begin(), value_deps.end());
                        out.insert(scopes_.resolve_store(binder, e.items[0].text));
                        return;
                    }
                    default:
                        for (const auto& item : e.items) loads(item, s, out);
                }
            }

            static const expr* root_name(const expr& e) {
                const expr* cur = &e;
                while (cur->is(expr_kind::subscript) || cur->is(expr_kind::attribute)) cur = &cur->items[0];
                return cur->is(expr_kind::name) ? cur : nullptr;
            }

            void assign_target(const expr& target, const name_set& rhs, int s) {
                switch (target.kind) {
                    case expr_kind::name: add(scopes_.resolve_store(s, target.text), rhs); return;
                    case expr_kind::tuple:
                    case expr_kind::list:
                        for (const auto& item : target.items) assign_target(item, rhs, s);
                        return;
                    case expr_kind::starred: assign_target(target.items[0], rhs, s); return;
                    case expr_kind::subscript:
                    case expr_kind::attribute: {
                        const expr* root = root_name(target);
                        if (!root) return;
                        name_set deps = rhs;
                        // Index expressions feed the mutated container too.
                        const expr* cur = &target;
                        while (cur->is(expr_kind::subscript) || cur->is(expr_kind::attribute)) {
                            if (cur->is(expr_kind::subscript)) loads(cur->items[1], s, deps);
                            cur = &cur->items[0];
                        }
                        auto q = scopes_.resolve_load(s, root->text);
                        if (named_scope(q.scope) && q.scope != builtin_scope) add(q, deps);
                        return;
                    }
                    default: return;
                }
            }

            int child_scope(int s, const std::string& name) const {
                return scopes_.find(scope_child(scopes_.at(s).path, name)).value_or(s);
            }

            void statement(const stmt& st, int s) {
                switch (st.kind) {
                    case stmt_kind::function_def: body(st.body, child_scope(s, st.name)); return;
                    case stmt_kind::class_def: body(st.body, child_scope(s, st.name)); return;
                    case stmt_kind::assign: {
                        name_set rhs;
                        loads(st.value, s, rhs);
                        for (const auto& target : st.targets) assign_target(target, rhs, s);
                        return;
                    }
                    case stmt_kind::aug_assign: {
                        name_set rhs;
                        loads(st.value, s, rhs);
                        if (st.targets[0].is(expr_kind::name)) rhs.insert(scopes_.resolve_load(s, st.targets[0].text));
                        assign_target(st.targets[0], rhs, s);
                        return;
                    }
                    case stmt_kind::ann_assign: {
                        if (st.value.is(expr_kind::empty)) return;
                        name_set rhs;
                        loads(st.value, s, rhs);
                        assign_target(st.targets[0], rhs, s);
                        return;
                    }
                    case stmt_kind::for_: {
                        name_set rhs;
                        loads(st.value, s, rhs);
                        assign_target(st.targets[0], rhs, s);
                        body(st.body, s);
                        body(st.orelse, s);
                        return;
                    }
                    case stmt_kind::with:
                        for (std::size_t i = 0; i < st.exprs.size(); ++i) {
                            name_set rhs;
                            loads(st.exprs[i], s, rhs);
                            if (i < st.targets.size()) assign_target(st.targets[i], rhs, s);
                        }
                        body(st.body, s);
                        return;
                    default: {
                        name_set ignored;
                        if (!st.value.is(expr_kind::empty)) loads(st.value, s, ignored);
                        for (const auto& e : st.exprs) loads(e, s, ignored);
                        body(st.body, s);
                        for (const auto& h : st.handlers) body(h.body, s);
                        body(st.orelse, s);
                        body(st.finalbody, s);
                    }
                }
            }
        };

        void collect_loops(const std::vector<stmt>& body, const std::string& file, static_info& out) {
            python::walk_stmts(body, [&](const stmt& st) {
                if (st.kind == stmt_kind::for_ || st.kind == stmt_kind::while_)
                    out.loop_spans[loop_key(st.pos)] = {file, st.pos.line, last_line(st), st.pos.col, 0};
                python::walk_exprs(st, [&](const expr& e) {
                    if (!e.is(expr_kind::list_comp)) return;
                    for (std::size_t i = 1; i < e.items.size(); ++i) {
                        const auto& f = e.items[i];
                        out.loop_spans[loop_key(f.pos)] = {file, f.pos.line, std::max(f.pos.line, f.pos.end_line),
                                                           f.pos.col, f.pos.end_col};
                    }
                });
            });
        }

    }  // namespace

    static_info collect_static_info(const python::module& m, const scope_table& scopes, const std::string& file) {
        static_info info;
        for (const auto& sc : scopes.scopes()) {
            if (sc.type == scope_type::function) info.function_spans[sc.path] = sc.span;
            if (sc.type == scope_type::klass) info.class_spans[sc.path] = sc.span;
            if (!scope_table::trackable(sc.type)) continue;
            for (const auto& [name, kind] : sc.kinds)
                if (sc.bound.contains(name)) info.symbols[{name, sc.path}] = kind;
        }
        collect_loops(m.body, file, info);
        dep_collector(scopes, info).body(m.body, scopes.module_index());
        return info;
    }

    static_info collect_static_info(std::string_view source, const std::string& file) {
        auto m = python::parse_module(source);
        auto scopes = scope_table::build(m, file);
        return collect_static_info(m, scopes, file);
    }

    void add_expression_dependencies(static_info& info, const scope_table& scopes, const trace_spec& spec) {
        for (const auto& t : spec.targets) {
            if (t.kind != target_kind::expression) continue;
            auto idx = scopes.find(t.scope);
            if (!idx) continue;
            auto e = python::parse_expression(t.name);
            dep_collector c(scopes, info);
            qualified_name key{t.name, t.scope};
            info.direct_deps[key] = c.expression(e, *idx);
            info.symbols.try_emplace(key, symbol_kind::variable);
        }
    }

}  // namespace tracescope::instrument
