#include "tracescope/instrument/sites.hpp"

#include "tracescope/python/parser.hpp"
#include "tracescope/python/unparse.hpp"

namespace tracescope::instrument {

    using python::expr;
    using python::expr_kind;
    using python::stmt;
    using python::stmt_kind;

    namespace {

        class site_walker {
        public:
            site_walker(const scope_table& scopes, const site_visitor& fn) : scopes_(scopes), fn_(fn) {}

            void body(std::vector<stmt>& stmts, int s, bool hoistable) {
                for (auto& st : stmts) statement(st, s, hoistable);
            }

        private:
            const scope_table& scopes_;
            const site_visitor& fn_;

            void binding_target(expr& target, int s) {
                switch (target.kind) {
                    case expr_kind::name: return;
                    case expr_kind::tuple:
                    case expr_kind::list:
                        for (auto& item : target.items) binding_target(item, s);
                        return;
                    case expr_kind::starred: binding_target(target.items[0], s); return;
                    default:
                        for (auto& item : target.items) visit(item, s, false);
                }
            }

            void statement(stmt& st, int s, bool hoistable) {
                switch (st.kind) {
                    case stmt_kind::function_def: {
                        for (auto& d : st.decorators) visit(d, s, false);
                        for (auto& e : st.exprs) visit(e, s, false);
                        int inner = scopes_.find(scope_child(scopes_.at(s).path, st.name)).value_or(s);
                        body(st.body, inner, true);
                        return;
                    }
                    case stmt_kind::class_def: {
                        for (auto& d : st.decorators) visit(d, s, false);
                        for (auto& e : st.exprs) visit(e, s, false);
                        int inner = scopes_.find(scope_child(scopes_.at(s).path, st.name)).value_or(s);
                        body(st.body, inner, false);
                        return;
                    }
                    case stmt_kind::assign:
                    case stmt_kind::aug_assign:
                    case stmt_kind::ann_assign:
                        visit(st.value, s, hoistable);
                        for (auto& t : st.targets) binding_target(t, s);
                        for (auto& e : st.exprs) visit(e, s, false);
                        return;
                    case stmt_kind::for_:
                        visit(st.value, s, hoistable);
                        binding_target(st.targets[0], s);
                        break;
                    case stmt_kind::while_: visit(st.value, s, hoistable && st.orelse.empty()); break;
                    case stmt_kind::with:
                        for (auto& e : st.exprs) visit(e, s, hoistable);
                        for (auto& t : st.targets) binding_target(t, s);
                        break;
                    case stmt_kind::del:
                        for (auto& t : st.targets) binding_target(t, s);
                        return;
                    case stmt_kind::assert_:
                        if (!st.exprs.empty()) visit(st.exprs[0], s, hoistable);
                        for (std::size_t i = 1; i < st.exprs.size(); ++i) visit(st.exprs[i], s, false);
                        return;
                    case stmt_kind::try_:
                        body(st.body, s, hoistable);
                        for (auto& h : st.handlers) {
                            visit(h.value, s, false);
                            body(h.body, s, hoistable);
                        }
                        body(st.orelse, s, hoistable);
                        body(st.finalbody, s, hoistable);
                        return;
                    default:
                        visit(st.value, s, hoistable);
                        for (auto& e : st.exprs) visit(e, s, hoistable);
                        break;
                }
                body(st.body, s, hoistable);
                body(st.orelse, s, hoistable);
            }

            void visit(expr& e, int s, bool hoistable) {
                if (e.is(expr_kind::empty)) return;
                fn_(e, hoistable, s);
                switch (e.kind) {
                    case expr_kind::lambda:
                    case expr_kind::generator:
                    case expr_kind::set_comp:
                    case expr_kind::dict_comp:
                        for (auto& item : e.items) visit(item, s, false);
                        return;
                    case expr_kind::list_comp:
                        for (std::size_t i = 0; i < e.items.size(); ++i) {
                            if (i == 0) {
                                visit(e.items[0], s, hoistable);
                                continue;
                            }
                            auto& f = e.items[i];
                            binding_target(f.items[0], s);
                            for (std::size_t k = 1; k < f.items.size(); ++k) visit(f.items[k], s, hoistable);
                        }
                        return;
                    default:
                        for (auto& item : e.items) visit(item, s, hoistable);
                }
            }
        };

    }  // namespace

    void visit_expression_sites(python::module& m, const scope_table& scopes, const site_visitor& fn) {
        site_walker(scopes, fn).body(m.body, scopes.module_index(), true);
    }

    std::string canonical_expression(const std::string& text) {
        return python::unparse(python::parse_expression(text));
    }

    std::vector<expression_site> find_expression_sites(const python::module& m, const scope_table& scopes,
                                                       const std::string& canonical, int line,
                                                       std::optional<int> col) {
        std::vector<expression_site> out;
        auto& mutable_module = const_cast<python::module&>(m);
        visit_expression_sites(mutable_module, scopes, [&](expr& e, bool hoistable, int s) {
            if (e.pos.line != line) return;
            if (col && e.pos.col != *col) return;
            switch (e.kind) {
                case expr_kind::arguments:
                case expr_kind::param:
                case expr_kind::keyword:
                case expr_kind::dict_pair:
                case expr_kind::comp_for:
                case expr_kind::slice: return;
                default: break;
            }
            if (python::unparse(e) != canonical) return;
            out.push_back({e.pos, hoistable, s});
        });
        return out;
    }

}  // namespace tracescope::instrument
