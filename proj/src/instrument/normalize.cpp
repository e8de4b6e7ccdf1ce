#include "tracescope/error.hpp"
#include "tracescope/instrument/rewrite.hpp"
#include "tracescope/instrument/sites.hpp"
#include "tracescope/python/unparse.hpp"
#include "tracescope/python/visit.hpp"

#include <set>

namespace tracescope::instrument {

    using python::expr;
    using python::expr_kind;
    using python::position;
    using python::stmt;
    using python::stmt_kind;

    rewrite_plan rewrite_plan::for_module(const python::module& m) {
        std::vector<std::string> ids;
        python::collect_identifiers(m, ids);
        rewrite_plan plan;
        for (int attempt = 0;; ++attempt) {
            auto suffix = attempt == 0 ? std::string{} : std::to_string(attempt);
            plan.temp_prefix = "__tr" + suffix + "_tmp_";
            plan.runtime_module = "_tr_rt" + suffix;
            bool clash = false;
            for (const auto& id : ids) {
                if (id.rfind(plan.temp_prefix, 0) == 0 || id == plan.runtime_module) {
                    clash = true;
                    break;
                }
            }
            if (!clash) return plan;
        }
    }

    void mark_tracked_expressions(python::module& m, const scope_table& scopes, const trace_spec& spec) {
        for (std::size_t i = 0; i < spec.targets.size(); ++i) {
            const auto& t = spec.targets[i];
            if (t.kind != target_kind::expression) continue;
            auto canonical = canonical_expression(t.name);
            std::optional<int> col;
            if (t.span.end_col > t.span.start_col) col = t.span.start_col;
            int id = static_cast<int>(i);
            visit_expression_sites(m, scopes, [&](expr& e, bool hoistable, int) {
                if (e.pos.line != t.span.start_line || (col && e.pos.col != *col)) return;
                if (python::unparse(e) != canonical) return;
                if (!hoistable)
                    throw error(error_code::unsupported_construct,
                                std::to_string(e.pos.line) + ":" + std::to_string(e.pos.col) + ": tracked expression '" +
                                        canonical + "' cannot be evaluated separately here");
                e.track_id = id;
            });
        }
    }

    namespace {

        bool opaque_scope(const expr& e) {
            return e.is(expr_kind::lambda) || e.is(expr_kind::generator) || e.is(expr_kind::set_comp) ||
                   e.is(expr_kind::dict_comp);
        }

        bool async_comprehension(const expr& e) {
            for (std::size_t i = 1; i < e.items.size(); ++i)
                if (e.items[i].is(expr_kind::comp_for) && (e.items[i].flags & python::flag_async)) return true;
            return false;
        }

        // Whether lowering must move something out of this expression.
        bool has_effect(const expr& e) {
            if (e.track_id >= 0) return true;
            if (opaque_scope(e)) return false;
            switch (e.kind) {
                case expr_kind::call:
                case expr_kind::yield:
                case expr_kind::yield_from:
                case expr_kind::await: return true;
                case expr_kind::list_comp:
                    if (!async_comprehension(e)) return true;
                    break;
                default: break;
            }
            for (const auto& item : e.items)
                if (has_effect(item)) return true;
            return false;
        }

        // Operand slots of a composite node in evaluation order.
        void operand_slots(expr& e, std::vector<expr*>& out) {
            auto push = [&](expr& child) {
                switch (child.kind) {
                    case expr_kind::empty: return;
                    case expr_kind::keyword:
                    case expr_kind::starred:
                    case expr_kind::double_starred: out.push_back(&child.items[0]); return;
                    case expr_kind::dict_pair:
                        out.push_back(&child.items[0]);
                        out.push_back(&child.items[1]);
                        return;
                    default: out.push_back(&child);
                }
            };
            switch (e.kind) {
                case expr_kind::named: push(e.items[1]); return;
                case expr_kind::call:
                    for (std::size_t i = 1; i < e.items.size(); ++i) push(e.items[i]);
                    return;
                default:
                    for (auto& item : e.items) push(item);
            }
        }

        void rename(expr& e, const std::map<std::string, std::string>& names) {
            if (names.empty()) return;
            if (e.is(expr_kind::name)) {
                if (auto it = names.find(e.text); it != names.end()) e.text = it->second;
                return;
            }
            if (e.is(expr_kind::lambda)) {
                auto inner = names;
                for (const auto& p : e.items[0].items) inner.erase(p.text);
                for (auto& p : e.items[0].items)
                    for (auto& sub : p.items) rename(sub, names);
                rename(e.items[1], inner);
                return;
            }
            if (e.is(expr_kind::list_comp) || e.is(expr_kind::set_comp) || e.is(expr_kind::generator) ||
                e.is(expr_kind::dict_comp)) {
                auto inner = names;
                std::size_t first_for = e.is(expr_kind::dict_comp) ? 2 : 1;
                for (std::size_t i = first_for; i < e.items.size(); ++i) {
                    auto& f = e.items[i];
                    rename(f.items[1], i == first_for ? names : inner);
                    std::vector<std::string> bound;
                    target_names(f.items[0], bound);
                    for (const auto& b : bound) inner.erase(b);
                    for (std::size_t k = 2; k < f.items.size(); ++k) rename(f.items[k], inner);
                }
                for (std::size_t i = 0; i < first_for; ++i) rename(e.items[i], inner);
                return;
            }
            for (auto& item : e.items) rename(item, names);
        }

        class normalizer {
        public:
            normalizer(const scope_table& scopes, rewrite_plan& plan) : scopes_(scopes), plan_(plan) {}

            std::vector<stmt> body(const std::vector<stmt>& stmts, int s, bool hoist) {
                std::vector<stmt> out;
                for (const auto& st : stmts) {
                    if (hoist) statement(st, s, out);
                    else passive(st, s, out);
                }
                return out;
            }

        private:
            const scope_table& scopes_;
            rewrite_plan& plan_;

            int child_scope(int s, const std::string& name) const {
                return scopes_.find(scope_child(scopes_.at(s).path, name)).value_or(s);
            }

            expr temp_name(const std::string& name, const position& pos) const { return python::make_name(name, pos); }

            bool safe_atom(const expr& e, int s) const {
                if (e.is(expr_kind::constant)) return true;
                if (e.is(expr_kind::name)) return plan_.is_temp(e.text) || scopes_.is_stable_local(s, e.text);
                return false;
            }

            expr to_temp(expr value, std::vector<stmt>& pre, int track_id = -1) {
                auto pos = value.pos;
                auto name = plan_.fresh();
                auto assign = python::make_assign(temp_name(name, pos), std::move(value), pos);
                assign.track_id = track_id;
                pre.push_back(std::move(assign));
                return temp_name(name, pos);
            }

            expr materialize(expr lowered, int s, std::vector<stmt>& pre) {
                if (safe_atom(lowered, s) || lowered.is(expr_kind::slice)) return lowered;
                return to_temp(std::move(lowered), pre);
            }

            void lower_slots(std::vector<expr*>& slots, int s, std::vector<stmt>& pre) {
                std::vector<bool> later(slots.size(), false);
                for (std::size_t i = slots.size(); i-- > 1;) later[i - 1] = later[i] || has_effect(*slots[i]);
                for (std::size_t i = 0; i < slots.size(); ++i) {
                    *slots[i] = lower(*slots[i], s, pre);
                    if (later[i]) *slots[i] = materialize(std::move(*slots[i]), s, pre);
                }
            }

            // Lowers the callee and arguments but leaves the call in place.
            expr lower_call_inner(const expr& call, int s, std::vector<stmt>& pre) {
                expr out = call;
                if (has_effect(out.items[0])) out.items[0] = lower_callee(out.items[0], s, pre);
                std::vector<expr*> slots;
                operand_slots(out, slots);
                lower_slots(slots, s, pre);
                return out;
            }

            // The callee is never moved as a whole so hooks keep its name.
            expr lower_callee(const expr& callee, int s, std::vector<stmt>& pre) {
                if (callee.is(expr_kind::attribute) && callee.track_id < 0) {
                    expr out = callee;
                    out.items[0] = lower(out.items[0], s, pre);
                    return out;
                }
                return lower(callee, s, pre);
            }

            expr lower(const expr& e, int s, std::vector<stmt>& pre) {
                if (!has_effect(e)) return e;
                expr out;
                switch (e.kind) {
                    case expr_kind::call: {
                        out = lower_call_inner(e, s, pre);
                        out.track_id = -1;
                        return to_temp(std::move(out), pre, e.track_id);
                    }
                    case expr_kind::yield:
                    case expr_kind::yield_from:
                    case expr_kind::await: {
                        out = e;
                        out.track_id = -1;
                        if (!out.items.empty() && !out.items[0].is(expr_kind::empty))
                            out.items[0] = lower(out.items[0], s, pre);
                        return to_temp(std::move(out), pre, e.track_id);
                    }
                    case expr_kind::list_comp:
                        out = async_comprehension(e) ? e : expand_list_comp(e, s, pre);
                        break;
                    case expr_kind::boolop: out = lower_boolop(e, s, pre); break;
                    case expr_kind::ifexp: out = lower_ifexp(e, s, pre); break;
                    case expr_kind::compare:
                        if (e.items.size() > 2) {
                            bool tail_effect = false;
                            for (std::size_t i = 2; i < e.items.size(); ++i) tail_effect |= has_effect(e.items[i]);
                            if (tail_effect) {
                                out = lower_chain(e, s, pre);
                                break;
                            }
                        }
                        [[fallthrough]];
                    default: {
                        out = e;
                        if (!opaque_scope(out)) {
                            std::vector<expr*> slots;
                            operand_slots(out, slots);
                            lower_slots(slots, s, pre);
                        }
                    }
                }
                if (e.track_id >= 0) {
                    out.track_id = -1;
                    return to_temp(std::move(out), pre, e.track_id);
                }
                return out;
            }

            stmt make_if(expr test, std::vector<stmt> then_body, const position& pos) {
                stmt st;
                st.kind = stmt_kind::if_;
                st.pos = pos;
                st.value = std::move(test);
                st.body = std::move(then_body);
                st.synthetic = true;
                return st;
            }

            static expr negate(expr e) {
                expr n;
                n.kind = expr_kind::unaryop;
                n.text = "not";
                n.pos = e.pos;
                n.items.push_back(std::move(e));
                return n;
            }

            expr lower_boolop(const expr& e, int s, std::vector<stmt>& pre) {
                std::size_t k = 1;
                while (k < e.items.size() && !has_effect(e.items[k])) ++k;
                if (k == e.items.size()) {
                    expr out = e;
                    out.track_id = -1;
                    out.items[0] = lower(out.items[0], s, pre);
                    return out;
                }
                expr head;
                if (k == 1) {
                    head = lower(e.items[0], s, pre);
                } else {
                    head = e;
                    head.track_id = -1;
                    head.items.resize(k);
                    head.items[0] = lower(head.items[0], s, pre);
                }
                auto result = to_temp(std::move(head), pre);
                bool is_and = e.text == "and";
                for (std::size_t j = k; j < e.items.size(); ++j) {
                    std::vector<stmt> block;
                    auto value = lower(e.items[j], s, block);
                    block.push_back(python::make_assign(result, std::move(value), e.items[j].pos));
                    pre.push_back(make_if(is_and ? result : negate(result), std::move(block), e.items[j].pos));
                }
                return result;
            }

            expr lower_ifexp(const expr& e, int s, std::vector<stmt>& pre) {
                expr out = e;
                out.track_id = -1;
                out.items[1] = lower(e.items[1], s, pre);
                if (!has_effect(e.items[0]) && !has_effect(e.items[2])) return out;
                auto name = plan_.fresh();
                auto target = temp_name(name, e.pos);
                std::vector<stmt> then_block, else_block;
                auto body = lower(e.items[0], s, then_block);
                then_block.push_back(python::make_assign(target, std::move(body), e.pos));
                auto other = lower(e.items[2], s, else_block);
                else_block.push_back(python::make_assign(target, std::move(other), e.pos));
                auto st = make_if(std::move(out.items[1]), std::move(then_block), e.pos);
                st.orelse = std::move(else_block);
                pre.push_back(std::move(st));
                return target;
            }

            // a < b < c with effects past the second operand keeps short-circuiting.
            expr lower_chain(const expr& e, int s, std::vector<stmt>& pre) {
                auto left = to_temp(lower(e.items[0], s, pre), pre);
                auto right = to_temp(lower(e.items[1], s, pre), pre);
                auto compare = [&](expr a, const std::string& op, expr b) {
                    expr c;
                    c.kind = expr_kind::compare;
                    c.pos = e.pos;
                    c.ops = {op};
                    c.items.push_back(std::move(a));
                    c.items.push_back(std::move(b));
                    return c;
                };
                auto result = to_temp(compare(left, e.ops[0], right), pre);
                std::vector<stmt>* sink = &pre;
                for (std::size_t j = 2; j < e.items.size(); ++j) {
                    std::vector<stmt> block;
                    auto next = to_temp(lower(e.items[j], s, block), block);
                    block.push_back(python::make_assign(result, compare(right, e.ops[j - 1], next), e.items[j].pos));
                    sink->push_back(make_if(result, std::move(block), e.items[j].pos));
                    sink = &sink->back().body;
                    right = next;
                }
                return result;
            }

            expr expand_list_comp(const expr& e, int s, std::vector<stmt>& pre) {
                auto result = to_temp(python::make_constant("[]", e.pos), pre);
                std::map<std::string, std::string> names;
                for (std::size_t i = 1; i < e.items.size(); ++i) {
                    std::vector<std::string> bound;
                    target_names(e.items[i].items[0], bound);
                    for (const auto& b : bound)
                        if (!names.contains(b)) names[b] = plan_.fresh();
                }
                expr renamed = e;
                for (std::size_t i = 1; i < renamed.items.size(); ++i) {
                    auto& f = renamed.items[i];
                    rename(f.items[0], names);
                    if (i > 1) rename(f.items[1], names);
                    for (std::size_t k = 2; k < f.items.size(); ++k) rename(f.items[k], names);
                }
                rename(renamed.items[0], names);

                std::vector<stmt> block;
                auto element = lower(renamed.items[0], s, block);
                auto append = python::make_call(python::make_attribute(result, "append", e.pos), {std::move(element)}, e.pos);
                append.synthetic = true;
                block.push_back(python::make_expr_stmt(std::move(append), e.pos));

                for (std::size_t i = renamed.items.size() - 1; i >= 1; --i) {
                    const auto& f = renamed.items[i];
                    for (std::size_t k = f.items.size() - 1; k >= 2; --k) {
                        std::vector<stmt> guarded;
                        auto cond = lower(f.items[k], s, guarded);
                        guarded.push_back(make_if(std::move(cond), std::move(block), f.items[k].pos));
                        block = std::move(guarded);
                    }
                    std::vector<stmt> outer;
                    stmt loop;
                    loop.kind = stmt_kind::for_;
                    loop.pos = f.pos;
                    loop.targets.push_back(f.items[0]);
                    loop.value = lower(f.items[1], s, i == 1 ? pre : outer);
                    loop.body = std::move(block);
                    outer.push_back(std::move(loop));
                    block = std::move(outer);
                }
                for (auto& st : block) pre.push_back(std::move(st));
                return result;
            }

            // Class bodies and similar: only nested definitions are rewritten.
            void passive(const stmt& st, int s, std::vector<stmt>& out) {
                stmt copy = st;
                switch (st.kind) {
                    case stmt_kind::function_def:
                        copy.body = body(st.body, child_scope(s, st.name), true);
                        break;
                    case stmt_kind::class_def: copy.body = body(st.body, child_scope(s, st.name), false); break;
                    default:
                        copy.body = body(st.body, s, false);
                        copy.orelse = body(st.orelse, s, false);
                        copy.finalbody = body(st.finalbody, s, false);
                        for (auto& h : copy.handlers) h.body = body(h.body, s, false);
                }
                out.push_back(std::move(copy));
            }

            void statement(const stmt& st, int s, std::vector<stmt>& out) {
                stmt copy = st;
                switch (st.kind) {
                    case stmt_kind::function_def:
                        copy.body = body(st.body, child_scope(s, st.name), true);
                        out.push_back(std::move(copy));
                        return;
                    case stmt_kind::class_def:
                        copy.body = body(st.body, child_scope(s, st.name), false);
                        out.push_back(std::move(copy));
                        return;
                    case stmt_kind::expr: {
                        const auto& v = st.value;
                        if (v.is(expr_kind::call) && v.track_id < 0) {
                            copy.value = lower_call_inner(v, s, out);
                        } else if ((v.is(expr_kind::yield) || v.is(expr_kind::yield_from) || v.is(expr_kind::await)) &&
                                   v.track_id < 0) {
                            if (!v.items.empty()) copy.value.items[0] = lower(v.items[0], s, out);
                        } else {
                            copy.value = lower(v, s, out);
                            if (copy.value.is(expr_kind::name) && plan_.is_temp(copy.value.text)) return;
                        }
                        out.push_back(std::move(copy));
                        return;
                    }
                    case stmt_kind::assign:
                    case stmt_kind::ann_assign: {
                        if (st.value.is(expr_kind::empty)) {
                            out.push_back(std::move(copy));
                            return;
                        }
                        bool target_effects = false;
                        for (const auto& t : st.targets) target_effects |= has_effect(t);
                        copy.value = lower_value(st.value, s, out, target_effects);
                        if (target_effects) {
                            copy.value = materialize(std::move(copy.value), s, out);
                            for (auto& t : copy.targets) lower_target(t, s, out);
                        }
                        out.push_back(std::move(copy));
                        return;
                    }
                    case stmt_kind::aug_assign: lower_aug(st, s, out); return;
                    case stmt_kind::return_:
                        copy.value = lower(st.value, s, out);
                        out.push_back(std::move(copy));
                        return;
                    case stmt_kind::raise: {
                        std::vector<expr*> slots;
                        for (auto& e : copy.exprs) slots.push_back(&e);
                        lower_slots(slots, s, out);
                        out.push_back(std::move(copy));
                        return;
                    }
                    case stmt_kind::assert_:
                        if (!copy.exprs.empty()) copy.exprs[0] = lower(copy.exprs[0], s, out);
                        out.push_back(std::move(copy));
                        return;
                    case stmt_kind::if_: {
                        copy.value = lower(st.value, s, out);
                        copy.body = body(st.body, s, true);
                        copy.orelse = body(st.orelse, s, true);
                        if (!(copy.orelse.size() == 1 && copy.orelse[0].kind == stmt_kind::if_))
                            for (auto& o : copy.orelse) o.is_elif = false;
                        out.push_back(std::move(copy));
                        return;
                    }
                    case stmt_kind::while_: {
                        copy.body = body(st.body, s, true);
                        copy.orelse = body(st.orelse, s, true);
                        if (has_effect(st.value) && st.orelse.empty()) {
                            std::vector<stmt> guard;
                            auto test = lower(st.value, s, guard);
                            stmt brk;
                            brk.kind = stmt_kind::break_;
                            brk.pos = st.pos;
                            auto check = make_if(negate(std::move(test)), {brk}, st.pos);
                            check.op = std::string(loop_guard_marker);
                            guard.push_back(std::move(check));
                            for (auto& b : copy.body) guard.push_back(std::move(b));
                            copy.body = std::move(guard);
                            copy.value = python::make_constant("True", st.value.pos);
                            copy.op = std::string(lowered_while_marker);
                        }
                        out.push_back(std::move(copy));
                        return;
                    }
                    case stmt_kind::for_:
                        copy.value = lower(st.value, s, out);
                        copy.body = body(st.body, s, true);
                        copy.orelse = body(st.orelse, s, true);
                        out.push_back(std::move(copy));
                        return;
                    case stmt_kind::with: lower_with(st, s, out); return;
                    case stmt_kind::try_:
                        copy.body = body(st.body, s, true);
                        for (auto& h : copy.handlers) h.body = body(h.body, s, true);
                        copy.orelse = body(st.orelse, s, true);
                        copy.finalbody = body(st.finalbody, s, true);
                        out.push_back(std::move(copy));
                        return;
                    default: out.push_back(std::move(copy)); return;
                }
            }

            expr lower_value(const expr& v, int s, std::vector<stmt>& out, bool force_temp) {
                if (!force_temp && v.track_id < 0) {
                    if (v.is(expr_kind::call)) return lower_call_inner(v, s, out);
                    if (v.is(expr_kind::yield) || v.is(expr_kind::yield_from) || v.is(expr_kind::await)) {
                        expr copy = v;
                        if (!copy.items.empty()) copy.items[0] = lower(copy.items[0], s, out);
                        return copy;
                    }
                }
                return lower(v, s, out);
            }

            void lower_target(expr& t, int s, std::vector<stmt>& out) {
                switch (t.kind) {
                    case expr_kind::tuple:
                    case expr_kind::list:
                        for (auto& item : t.items) lower_target(item, s, out);
                        return;
                    case expr_kind::starred: lower_target(t.items[0], s, out); return;
                    case expr_kind::subscript:
                    case expr_kind::attribute: {
                        std::vector<expr*> slots;
                        operand_slots(t, slots);
                        lower_slots(slots, s, out);
                        return;
                    }
                    default: return;
                }
            }

            void lower_aug(const stmt& st, int s, std::vector<stmt>& out) {
                stmt copy = st;
                auto& target = copy.targets[0];
                if (!has_effect(st.value)) {
                    lower_target(target, s, out);
                    out.push_back(std::move(copy));
                    return;
                }
                if (target.is(expr_kind::name)) {
                    if (safe_atom(target, s)) {
                        copy.value = lower_value(st.value, s, out, false);
                        out.push_back(std::move(copy));
                        return;
                    }
                    // Read the old value first, exactly as the original statement does.
                    auto held = to_temp(target, out);
                    copy.targets[0] = held;
                    copy.value = lower_value(st.value, s, out, false);
                    auto original_target = st.targets[0];
                    out.push_back(std::move(copy));
                    auto rebind = python::make_assign(original_target, held, st.pos);
                    rebind.op = "aug-rebind";
                    out.push_back(std::move(rebind));
                    return;
                }
                if (target.is(expr_kind::subscript) || target.is(expr_kind::attribute)) {
                    target.items[0] = to_temp(lower(target.items[0], s, out), out);
                    if (target.is(expr_kind::subscript)) target.items[1] = materialize(lower(target.items[1], s, out), s, out);
                }
                copy.value = lower_value(st.value, s, out, false);
                out.push_back(std::move(copy));
            }

            void lower_with(const stmt& st, int s, std::vector<stmt>& out) {
                bool effects = false;
                for (const auto& e : st.exprs) effects |= has_effect(e);
                if (!effects) {
                    stmt copy = st;
                    copy.body = body(st.body, s, true);
                    out.push_back(std::move(copy));
                    return;
                }
                // Later context managers are entered after earlier ones, so split.
                std::vector<stmt>* sink = &out;
                for (std::size_t i = 0; i < st.exprs.size(); ++i) {
                    stmt w;
                    w.kind = stmt_kind::with;
                    w.pos = st.pos;
                    w.is_async = st.is_async;
                    w.exprs.push_back(lower(st.exprs[i], s, *sink));
                    expr none;
                    w.targets.push_back(i < st.targets.size() ? st.targets[i] : none);
                    sink->push_back(std::move(w));
                    sink = &sink->back().body;
                }
                *sink = body(st.body, s, true);
            }
        };

    }  // namespace

    python::module normalize(const python::module& m, const scope_table& scopes, rewrite_plan& plan) {
        python::module out;
        out.body = normalizer(scopes, plan).body(m.body, scopes.module_index(), true);
        return out;
    }

}  // namespace tracescope::instrument
