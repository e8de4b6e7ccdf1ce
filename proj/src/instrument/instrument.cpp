#include "tracescope/error.hpp"
#include "tracescope/instrument/rewrite.hpp"
#include "tracescope/python/parser.hpp"
#include "tracescope/python/unparse.hpp"
#include "tracescope/python/visit.hpp"

#include <set>

namespace tracescope::instrument {

    using python::expr;
    using python::expr_kind;
    using python::position;
    using python::stmt;
    using python::stmt_kind;

    std::map<std::string, std::string> import_aliases(const python::module& m) {
        std::map<std::string, std::string> aliases;
        python::walk_stmts(m.body, [&](const stmt& st) {
            for (std::size_t i = 0; i < st.names.size(); ++i) {
                const auto& name = st.names[i];
                const auto& alias = i < st.aliases.size() ? st.aliases[i] : std::string{};
                if (st.kind == stmt_kind::import) {
                    if (!alias.empty()) aliases[alias] = name;
                    else {
                        auto head = name.substr(0, name.find('.'));
                        aliases[head] = head;
                    }
                } else if (st.kind == stmt_kind::import_from && name != "*") {
                    aliases[alias.empty() ? name : alias] = st.op + "." + name;
                }
            }
        });
        return aliases;
    }

    bool is_excluded_call(const std::string& callee, const std::map<std::string, std::string>& aliases,
                          const std::vector<std::string>& exclusions) {
        if (callee.empty()) return false;
        auto dot = callee.find('.');
        auto head = callee.substr(0, dot);
        std::string full = callee;
        if (auto it = aliases.find(head); it != aliases.end())
            full = it->second + (dot == std::string::npos ? "" : callee.substr(dot));
        auto last = full.substr(full.rfind('.') + 1);
        for (const auto& ex : exclusions) {
            if (ex.empty()) continue;
            for (const std::string* candidate : std::initializer_list<const std::string*>{&full, &callee}) {
                if (*candidate == ex || candidate->rfind(ex + ".", 0) == 0) return true;
            }
            if (last == ex) return true;
        }
        return false;
    }

    namespace {

        void mark_synthetic(std::vector<stmt>& body, const position& pos) {
            for (auto& st : body) {
                st.synthetic = true;
                st.pos.line = pos.line;
                st.pos.col = pos.col;
                for (auto* block : {&st.body, &st.orelse, &st.handlers, &st.finalbody}) mark_synthetic(*block, pos);
            }
        }

        bool is_docstring(const stmt& st) {
            if (st.kind != stmt_kind::expr || !st.value.is(expr_kind::constant)) return false;
            const auto& text = st.value.text;
            std::size_t i = 0;
            while (i < text.size() && (text[i] == 'r' || text[i] == 'R' || text[i] == 'u' || text[i] == 'U')) ++i;
            return i < text.size() && (text[i] == '"' || text[i] == '\'');
        }

        struct context {
            int scope{0};
            bool calls{true};
            bool loops{true};
            bool customs{true};
        };

        class hook_writer {
        public:
            hook_writer(const trace_spec& spec, const scope_table& scopes, rewrite_plan& plan,
                        std::map<std::string, std::string> aliases)
                : spec_(spec), scopes_(scopes), plan_(plan), aliases_(std::move(aliases)),
                  exclusions_(effective_exclusions(spec)), rt_(plan.runtime_module) {
                for (std::size_t i = 0; i < spec.targets.size(); ++i) {
                    const auto& t = spec.targets[i];
                    auto key = t.name + "@" + t.scope;
                    if (t.kind == target_kind::variable) variables_.insert({t.name, t.scope});
                    expression_keys_.push_back(key);
                }
                for (const auto& c : spec.customs)
                    customs_[c.anchor.name + "@" + c.anchor.scope].push_back(c);
            }

            std::vector<stmt> body(const std::vector<stmt>& stmts, const context& ctx) {
                std::vector<stmt> out;
                for (const auto& st : stmts) statement(st, ctx, out);
                return out;
            }

        private:
            const trace_spec& spec_;
            const scope_table& scopes_;
            rewrite_plan& plan_;
            std::map<std::string, std::string> aliases_;
            std::vector<std::string> exclusions_;
            std::string rt_;
            std::set<qualified_name> variables_;
            std::vector<std::string> expression_keys_;
            std::map<std::string, std::vector<custom_expression>> customs_;

            std::vector<stmt> parse(const std::string& text, const position& pos) const {
                auto body = python::parse_module(text).body;
                mark_synthetic(body, pos);
                return body;
            }

            static std::string line_of(const position& pos) { return std::to_string(pos.line); }

            void record(const std::string& key, const std::string& value_text, bool is_variable, const position& pos,
                        const context& ctx, std::vector<stmt>& out) {
                for (auto& st : parse(rt_ + ".value(" + python::quote_string(key) + ", " + value_text + ", " +
                                              line_of(pos) + ", " + (is_variable ? "True" : "False") + ")\n",
                                      pos))
                    out.push_back(std::move(st));
                if (!ctx.customs) return;
                auto it = customs_.find(key);
                if (it == customs_.end()) return;
                for (const auto& c : it->second) {
                    auto held = plan_.fresh();
                    auto caught = plan_.fresh();
                    std::string text = "try:\n    " + rt_ + ".suspend()\n    " + held + " = (" + c.expression_text +
                                       ")\nexcept Exception as " + caught + ":\n    " + held + " = " + rt_ +
                                       ".failed(" + caught + ")\nfinally:\n    " + rt_ + ".resume()\n" + rt_ +
                                       ".custom(" + python::quote_string(c.label) + ", " + held + ", " +
                                       line_of(pos) + ")\n";
                    for (auto& st : parse(text, pos)) out.push_back(std::move(st));
                }
            }

            void record_bindings(const std::vector<expr>& targets, const position& pos, const context& ctx,
                                 std::vector<stmt>& out) {
                std::vector<std::string> names;
                for (const auto& t : targets) target_names(t, names);
                for (const auto& n : names) {
                    if (plan_.is_temp(n)) continue;
                    auto q = scopes_.resolve_store(ctx.scope, n);
                    if (variables_.contains(q)) record(q.str(), n, true, pos, ctx, out);
                }
            }

            void wrap_call(stmt st, const expr& call, const context& ctx, std::vector<stmt>& out) {
                auto name = dotted_name(call.items[0]);
                if (name.empty()) name = python::unparse(call.items[0]);
                auto pos = st.pos;
                if (is_excluded_call(name, aliases_, exclusions_)) {
                    auto hooks = parse(rt_ + ".suspend()\ntry:\n    pass\nfinally:\n    " + rt_ + ".resume()\n", pos);
                    hooks[1].body = {std::move(st)};
                    for (auto& h : hooks) out.push_back(std::move(h));
                    return;
                }
                if (!ctx.calls) {
                    out.push_back(std::move(st));
                    return;
                }
                auto handle = plan_.fresh();
                auto hooks = parse(handle + " = " + rt_ + ".enter(" + python::quote_string(name) + ", " + line_of(pos) +
                                           ")\ntry:\n    pass\nexcept BaseException:\n    " + rt_ + ".abort(" + handle +
                                           ")\n    raise\n" + rt_ + ".leave(" + handle + ")\n",
                                   pos);
                hooks[1].body = {std::move(st)};
                for (auto& h : hooks) out.push_back(std::move(h));
            }

            static const expr* statement_call(const stmt& st) {
                switch (st.kind) {
                    case stmt_kind::expr:
                    case stmt_kind::assign:
                    case stmt_kind::aug_assign:
                    case stmt_kind::ann_assign:
                        if (st.value.is(expr_kind::call) && !st.value.synthetic) return &st.value;
                        return nullptr;
                    default: return nullptr;
                }
            }

            context child(const context& ctx, const std::string& name, bool klass) const {
                context c;
                c.scope = scopes_.find(scope_child(scopes_.at(ctx.scope).path, name)).value_or(ctx.scope);
                const auto& node = scopes_.at(c.scope);
                c.calls = !klass;
                c.customs = !klass;
                // Generator and coroutine frames interleave with their callers,
                // so blocks left open across a suspension would not nest.
                c.loops = !klass && !node.is_generator && !node.is_async;
                return c;
            }

            std::vector<stmt> prologue_then(std::vector<stmt> prologue, std::vector<stmt> body) {
                std::size_t at = (!body.empty() && is_docstring(body.front())) ? 1 : 0;
                body.insert(body.begin() + static_cast<std::ptrdiff_t>(at), std::make_move_iterator(prologue.begin()),
                            std::make_move_iterator(prologue.end()));
                return body;
            }

            void statement(const stmt& st, const context& ctx, std::vector<stmt>& out) {
                if (st.synthetic && st.op != loop_guard_marker) {
                    stmt copy = st;
                    copy.body = body(st.body, ctx);
                    copy.orelse = body(st.orelse, ctx);
                    out.push_back(std::move(copy));
                    return;
                }
                switch (st.kind) {
                    case stmt_kind::function_def: {
                        stmt copy = st;
                        auto inner = child(ctx, st.name, false);
                        std::vector<stmt> params;
                        for (const auto& p : st.exprs[0].items) {
                            if (p.text.empty()) continue;
                            qualified_name q{p.text, scopes_.at(inner.scope).path};
                            if (variables_.contains(q)) record(q.str(), p.text, true, st.pos, inner, params);
                        }
                        copy.body = prologue_then(std::move(params), body(st.body, inner));
                        out.push_back(std::move(copy));
                        return;
                    }
                    case stmt_kind::class_def: {
                        stmt copy = st;
                        copy.body = body(st.body, child(ctx, st.name, true));
                        out.push_back(std::move(copy));
                        return;
                    }
                    case stmt_kind::for_:
                    case stmt_kind::while_: loop(st, ctx, out); return;
                    case stmt_kind::if_: {
                        stmt copy = st;
                        copy.body = body(st.body, ctx);
                        copy.orelse = body(st.orelse, ctx);
                        out.push_back(std::move(copy));
                        return;
                    }
                    case stmt_kind::with: {
                        stmt copy = st;
                        std::vector<stmt> bound;
                        record_bindings(st.targets, st.pos, ctx, bound);
                        auto inner = body(st.body, ctx);
                        bound.insert(bound.end(), std::make_move_iterator(inner.begin()),
                                     std::make_move_iterator(inner.end()));
                        copy.body = std::move(bound);
                        out.push_back(std::move(copy));
                        return;
                    }
                    case stmt_kind::try_: {
                        stmt copy = st;
                        copy.body = body(st.body, ctx);
                        for (auto& h : copy.handlers) {
                            std::vector<stmt> bound;
                            if (!h.name.empty()) record_bindings({python::make_name(h.name)}, h.pos, ctx, bound);
                            auto inner = body(h.body, ctx);
                            bound.insert(bound.end(), std::make_move_iterator(inner.begin()),
                                         std::make_move_iterator(inner.end()));
                            h.body = std::move(bound);
                        }
                        copy.orelse = body(st.orelse, ctx);
                        copy.finalbody = body(st.finalbody, ctx);
                        out.push_back(std::move(copy));
                        return;
                    }
                    default: break;
                }

                auto pos = st.pos;
                if (const expr* call = statement_call(st)) wrap_call(st, *call, ctx, out);
                else out.push_back(st);

                switch (st.kind) {
                    case stmt_kind::assign: record_bindings(st.targets, pos, ctx, out); break;
                    case stmt_kind::aug_assign: record_bindings(st.targets, pos, ctx, out); break;
                    case stmt_kind::ann_assign:
                        if (!st.value.is(expr_kind::empty)) record_bindings(st.targets, pos, ctx, out);
                        break;
                    default: break;
                }
                if (st.track_id >= 0 && st.kind == stmt_kind::assign) {
                    const auto& key = expression_keys_.at(static_cast<std::size_t>(st.track_id));
                    record(key, st.targets[0].text, false, pos, ctx, out);
                }
            }

            void loop(const stmt& st, const context& ctx, std::vector<stmt>& out) {
                stmt copy = st;
                copy.op.clear();
                std::vector<stmt> head;
                std::string handle;
                if (ctx.loops) {
                    handle = plan_.fresh();
                    head = parse(rt_ + ".iter(" + handle + ")\n", st.pos);
                }
                if (st.kind == stmt_kind::for_) record_bindings(st.targets, st.pos, ctx, head);
                auto inner = body(st.body, ctx);
                std::size_t at = 0;
                if (st.op == lowered_while_marker) {
                    for (std::size_t i = 0; i < inner.size(); ++i)
                        if (inner[i].op == loop_guard_marker) at = i + 1;
                }
                inner.insert(inner.begin() + static_cast<std::ptrdiff_t>(at), std::make_move_iterator(head.begin()),
                             std::make_move_iterator(head.end()));
                copy.body = std::move(inner);
                copy.orelse = body(st.orelse, ctx);
                if (!ctx.loops) {
                    out.push_back(std::move(copy));
                    return;
                }
                if (!copy.orelse.empty()) {
                    auto close = parse(rt_ + ".end(" + handle + ")\n", st.pos);
                    copy.orelse.insert(copy.orelse.begin(), std::move(close.front()));
                }
                std::string key = std::to_string(st.pos.line) + ":" + std::to_string(st.pos.col);
                auto hooks = parse(handle + " = " + rt_ + ".loop(" + line_of(st.pos) + ", " + python::quote_string(key) +
                                           ")\ntry:\n    pass\nexcept BaseException:\n    " + rt_ + ".abort(" + handle +
                                           ")\n    raise\nfinally:\n    " + rt_ + ".end(" + handle + ")\n",
                                   st.pos);
                hooks[1].body = {std::move(copy)};
                for (auto& h : hooks) out.push_back(std::move(h));
            }
        };

        std::size_t prologue_index(const std::vector<stmt>& body) {
            std::size_t i = 0;
            if (i < body.size() && is_docstring(body[i])) ++i;
            while (i < body.size() && body[i].kind == stmt_kind::import_from && body[i].op == "__future__") ++i;
            return i;
        }

    }  // namespace

    python::module instrument(const python::module& normalized, const trace_spec& spec, const scope_table& scopes,
                              rewrite_plan& plan) {
        hook_writer writer(spec, scopes, plan, import_aliases(normalized));
        context root;
        root.scope = scopes.module_index();
        python::module out;
        out.body = writer.body(normalized.body, root);
        return out;
    }

    std::string emit(const python::module& instrumented, const rewrite_plan& plan) {
        python::module copy = instrumented;
        auto runtime_import = python::parse_module("import " + plan.runtime_module + "\n").body;
        auto at = prologue_index(copy.body);
        copy.body.insert(copy.body.begin() + static_cast<std::ptrdiff_t>(at), runtime_import.front());
        auto text = python::unparse(copy);
        try {
            python::parse_module(text);
        } catch (const error& e) {
            throw error(error_code::emit_error, std::string("emitted program does not parse: ") + e.what());
        }
        return text;
    }

}  // namespace tracescope::instrument
