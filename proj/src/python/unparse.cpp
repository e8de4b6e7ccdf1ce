#include "tracescope/python/unparse.hpp"

#include "tracescope/error.hpp"

#include <cctype>

namespace tracescope::python {

    namespace {

        enum prec : int {
            p_tuple = 0,
            p_test = 3,
            p_or = 4,
            p_and = 5,
            p_not = 6,
            p_cmp = 7,
            p_bor = 8,
            p_bxor = 9,
            p_band = 10,
            p_shift = 11,
            p_arith = 12,
            p_term = 13,
            p_factor = 14,
            p_power = 15,
            p_await = 16,
            p_atom = 17,
        };

        int binop_prec(const std::string& op) {
            if (op == "|") return p_bor;
            if (op == "^") return p_bxor;
            if (op == "&") return p_band;
            if (op == "<<" || op == ">>") return p_shift;
            if (op == "+" || op == "-") return p_arith;
            if (op == "**") return p_power;
            return p_term;
        }

        int precedence(const expr& e) {
            switch (e.kind) {
                case expr_kind::lambda:
                case expr_kind::ifexp: return p_test;
                case expr_kind::boolop: return e.text == "or" ? p_or : p_and;
                case expr_kind::unaryop: return e.text == "not" ? p_not : p_factor;
                case expr_kind::compare: return p_cmp;
                case expr_kind::binop: return binop_prec(e.text);
                case expr_kind::await: return p_await;
                case expr_kind::starred:
                case expr_kind::double_starred: return p_bor;
                default: return p_atom;
            }
        }

        class printer {
          public:
            std::string out;

            void emit(const expr& e, int required) {
                bool paren = precedence(e) < required;
                if (paren) out += "(";
                emit_raw(e);
                if (paren) out += ")";
            }

            void emit_list(const std::vector<expr>& items, std::size_t from, int level) {
                for (std::size_t i = from; i < items.size(); ++i) {
                    if (i > from) out += ", ";
                    emit(items[i], level);
                }
            }

            void emit_params(const expr& args) {
                bool first = true;
                for (const auto& p : args.items) {
                    if (!first) out += ", ";
                    first = false;
                    std::string marker = p.ops.empty() ? "" : p.ops.front();
                    if (marker == "/") {
                        out += "/";
                        continue;
                    }
                    out += marker + p.text;
                    std::size_t idx = 0;
                    if (p.flags & flag_has_annotation) {
                        out += ": ";
                        emit(p.items[idx++], p_test);
                    }
                    if (p.flags & flag_has_default) {
                        out += (p.flags & flag_has_annotation) ? " = " : "=";
                        emit(p.items[idx++], p_test);
                    }
                }
            }

            void emit_comp_fors(const std::vector<expr>& items, std::size_t from) {
                for (std::size_t i = from; i < items.size(); ++i) {
                    const auto& f = items[i];
                    out += (f.flags & flag_async) ? " async for " : " for ";
                    emit(f.items[0], p_tuple);
                    out += " in ";
                    emit(f.items[1], p_or);
                    for (std::size_t k = 2; k < f.items.size(); ++k) {
                        out += " if ";
                        emit(f.items[k], p_or);
                    }
                }
            }

            void emit_raw(const expr& e) {
                switch (e.kind) {
                    case expr_kind::empty: return;
                    case expr_kind::name:
                    case expr_kind::constant: out += e.text; return;
                    case expr_kind::attribute: {
                        const auto& base = e.items[0];
                        bool int_literal = base.is(expr_kind::constant) && !base.text.empty() &&
                                           std::isdigit(static_cast<unsigned char>(base.text[0]));
                        if (int_literal) {
                            out += "(" + base.text + ")";
                        } else {
                            emit(base, p_atom);
                        }
                        out += "." + e.text;
                        return;
                    }
                    case expr_kind::subscript: {
                        emit(e.items[0], p_atom);
                        out += "[";
                        const auto& index = e.items[1];
                        if (index.is(expr_kind::tuple) && !index.items.empty()) {
                            emit_list(index.items, 0, p_test);
                            if (index.items.size() == 1) out += ",";
                        } else {
                            emit(index, p_test);
                        }
                        out += "]";
                        return;
                    }
                    case expr_kind::slice: {
                        emit(e.items[0], p_test);
                        out += ":";
                        emit(e.items[1], p_test);
                        if (!e.items[2].is(expr_kind::empty)) {
                            out += ":";
                            emit(e.items[2], p_test);
                        }
                        return;
                    }
                    case expr_kind::call: {
                        emit(e.items[0], p_atom);
                        out += "(";
                        emit_list(e.items, 1, p_test);
                        out += ")";
                        return;
                    }
                    case expr_kind::keyword:
                        out += e.text + "=";
                        emit(e.items[0], p_test);
                        return;
                    case expr_kind::starred:
                        out += "*";
                        emit(e.items[0], p_bor);
                        return;
                    case expr_kind::double_starred:
                        out += "**";
                        emit(e.items[0], p_bor);
                        return;
                    case expr_kind::binop: {
                        int p = binop_prec(e.text);
                        if (e.text == "**") {
                            emit(e.items[0], p_await);
                            out += " ** ";
                            emit(e.items[1], p_factor);
                        } else {
                            emit(e.items[0], p);
                            out += " " + e.text + " ";
                            emit(e.items[1], p + 1);
                        }
                        return;
                    }
                    case expr_kind::unaryop:
                        if (e.text == "not") {
                            out += "not ";
                            emit(e.items[0], p_not);
                        } else {
                            out += e.text;
                            emit(e.items[0], p_factor);
                        }
                        return;
                    case expr_kind::boolop: {
                        int p = e.text == "or" ? p_or : p_and;
                        for (std::size_t i = 0; i < e.items.size(); ++i) {
                            if (i) out += " " + e.text + " ";
                            emit(e.items[i], p + 1);
                        }
                        return;
                    }
                    case expr_kind::compare:
                        emit(e.items[0], p_bor);
                        for (std::size_t i = 0; i < e.ops.size(); ++i) {
                            out += " " + e.ops[i] + " ";
                            emit(e.items[i + 1], p_bor);
                        }
                        return;
                    case expr_kind::ifexp:
                        emit(e.items[0], p_or);
                        out += " if ";
                        emit(e.items[1], p_or);
                        out += " else ";
                        emit(e.items[2], p_test);
                        return;
                    case expr_kind::lambda:
                        out += "lambda";
                        if (!e.items[0].items.empty()) {
                            out += " ";
                            emit_params(e.items[0]);
                        }
                        out += ": ";
                        emit(e.items[1], p_test);
                        return;
                    case expr_kind::arguments: emit_params(e); return;
                    case expr_kind::param: throw error(error_code::emit_error, "parameter outside a parameter list");
                    case expr_kind::tuple:
                        out += "(";
                        emit_list(e.items, 0, p_test);
                        if (e.items.size() == 1) out += ",";
                        out += ")";
                        return;
                    case expr_kind::list:
                        out += "[";
                        emit_list(e.items, 0, p_test);
                        out += "]";
                        return;
                    case expr_kind::set:
                        if (e.items.empty()) throw error(error_code::emit_error, "empty set literal");
                        out += "{";
                        emit_list(e.items, 0, p_test);
                        out += "}";
                        return;
                    case expr_kind::dict:
                        out += "{";
                        emit_list(e.items, 0, p_test);
                        out += "}";
                        return;
                    case expr_kind::dict_pair:
                        emit(e.items[0], p_test);
                        out += ": ";
                        emit(e.items[1], p_test);
                        return;
                    case expr_kind::list_comp:
                        out += "[";
                        emit(e.items[0], p_test);
                        emit_comp_fors(e.items, 1);
                        out += "]";
                        return;
                    case expr_kind::set_comp:
                        out += "{";
                        emit(e.items[0], p_test);
                        emit_comp_fors(e.items, 1);
                        out += "}";
                        return;
                    case expr_kind::generator:
                        out += "(";
                        emit(e.items[0], p_test);
                        emit_comp_fors(e.items, 1);
                        out += ")";
                        return;
                    case expr_kind::dict_comp:
                        out += "{";
                        emit(e.items[0], p_test);
                        out += ": ";
                        emit(e.items[1], p_test);
                        emit_comp_fors(e.items, 2);
                        out += "}";
                        return;
                    case expr_kind::comp_for: throw error(error_code::emit_error, "comprehension clause out of place");
                    case expr_kind::named:
                        out += "(";
                        emit(e.items[0], p_atom);
                        out += " := ";
                        emit(e.items[1], p_test);
                        out += ")";
                        return;
                    case expr_kind::await:
                        out += "await ";
                        emit(e.items[0], p_atom);
                        return;
                    case expr_kind::yield:
                        out += "(yield";
                        if (!e.items.empty() && !e.items[0].is(expr_kind::empty)) {
                            out += " ";
                            emit(e.items[0], p_tuple);
                        }
                        out += ")";
                        return;
                    case expr_kind::yield_from:
                        out += "(yield from ";
                        emit(e.items[0], p_test);
                        out += ")";
                        return;
                }
            }

            void line(int indent, const std::string& text) {
                out.append(static_cast<std::size_t>(indent) * 4, ' ');
                out += text;
                out += "\n";
            }

            std::string expr_text(const expr& e, int level = p_tuple) {
                printer p;
                p.emit(e, level);
                return p.out;
            }

            void block(const std::vector<stmt>& body, int indent) {
                if (body.empty()) {
                    line(indent, "pass");
                    return;
                }
                for (const auto& s : body) statement(s, indent);
            }

            void statement(const stmt& s, int indent) {
                switch (s.kind) {
                    case stmt_kind::expr: line(indent, expr_text(s.value)); return;
                    case stmt_kind::assign: {
                        std::string text;
                        for (const auto& t : s.targets) text += expr_text(t) + " = ";
                        line(indent, text + expr_text(s.value));
                        return;
                    }
                    case stmt_kind::aug_assign:
                        line(indent, expr_text(s.targets[0]) + " " + s.op + " " + expr_text(s.value));
                        return;
                    case stmt_kind::ann_assign: {
                        std::string text = expr_text(s.targets[0]) + ": " + expr_text(s.exprs[0], p_test);
                        if (!s.value.is(expr_kind::empty)) text += " = " + expr_text(s.value);
                        line(indent, text);
                        return;
                    }
                    case stmt_kind::return_:
                        line(indent, s.value.is(expr_kind::empty) ? "return" : "return " + expr_text(s.value));
                        return;
                    case stmt_kind::pass: line(indent, "pass"); return;
                    case stmt_kind::break_: line(indent, "break"); return;
                    case stmt_kind::continue_: line(indent, "continue"); return;
                    case stmt_kind::del: {
                        std::string text = "del ";
                        for (std::size_t i = 0; i < s.targets.size(); ++i)
                            text += (i ? ", " : "") + expr_text(s.targets[i]);
                        line(indent, text);
                        return;
                    }
                    case stmt_kind::global:
                    case stmt_kind::nonlocal: {
                        std::string text = s.kind == stmt_kind::global ? "global " : "nonlocal ";
                        for (std::size_t i = 0; i < s.names.size(); ++i) text += (i ? ", " : "") + s.names[i];
                        line(indent, text);
                        return;
                    }
                    case stmt_kind::import:
                    case stmt_kind::import_from: {
                        std::string text = s.kind == stmt_kind::import ? "import " : "from " + s.op + " import ";
                        for (std::size_t i = 0; i < s.names.size(); ++i) {
                            text += (i ? ", " : "") + s.names[i];
                            if (!s.aliases[i].empty()) text += " as " + s.aliases[i];
                        }
                        line(indent, text);
                        return;
                    }
                    case stmt_kind::raise: {
                        std::string text = "raise";
                        if (!s.exprs.empty()) text += " " + expr_text(s.exprs[0], p_test);
                        if (s.exprs.size() > 1) text += " from " + expr_text(s.exprs[1], p_test);
                        line(indent, text);
                        return;
                    }
                    case stmt_kind::assert_: {
                        std::string text = "assert " + expr_text(s.exprs[0], p_test);
                        if (s.exprs.size() > 1) text += ", " + expr_text(s.exprs[1], p_test);
                        line(indent, text);
                        return;
                    }
                    case stmt_kind::if_: {
                        line(indent, (s.is_elif ? "elif " : "if ") + expr_text(s.value, p_test) + ":");
                        block(s.body, indent + 1);
                        if (s.orelse.size() == 1 && s.orelse[0].kind == stmt_kind::if_ && s.orelse[0].is_elif) {
                            statement(s.orelse[0], indent);
                        } else if (!s.orelse.empty()) {
                            line(indent, "else:");
                            block(s.orelse, indent + 1);
                        }
                        return;
                    }
                    case stmt_kind::while_:
                        line(indent, "while " + expr_text(s.value, p_test) + ":");
                        block(s.body, indent + 1);
                        if (!s.orelse.empty()) {
                            line(indent, "else:");
                            block(s.orelse, indent + 1);
                        }
                        return;
                    case stmt_kind::for_:
                        line(indent, std::string(s.is_async ? "async " : "") + "for " + expr_text(s.targets[0]) +
                                             " in " + expr_text(s.value) + ":");
                        block(s.body, indent + 1);
                        if (!s.orelse.empty()) {
                            line(indent, "else:");
                            block(s.orelse, indent + 1);
                        }
                        return;
                    case stmt_kind::function_def: {
                        for (const auto& d : s.decorators) line(indent, "@" + expr_text(d, p_test));
                        printer params;
                        params.emit_params(s.exprs[0]);
                        std::string text = std::string(s.is_async ? "async " : "") + "def " + s.name + "(" +
                                           params.out + ")";
                        if (s.exprs.size() > 1 && !s.exprs[1].is(expr_kind::empty))
                            text += " -> " + expr_text(s.exprs[1], p_test);
                        line(indent, text + ":");
                        block(s.body, indent + 1);
                        return;
                    }
                    case stmt_kind::class_def: {
                        for (const auto& d : s.decorators) line(indent, "@" + expr_text(d, p_test));
                        std::string text = "class " + s.name;
                        if (!s.exprs.empty()) {
                            printer args;
                            args.emit_list(s.exprs, 0, p_test);
                            text += "(" + args.out + ")";
                        }
                        line(indent, text + ":");
                        block(s.body, indent + 1);
                        return;
                    }
                    case stmt_kind::try_:
                        line(indent, "try:");
                        block(s.body, indent + 1);
                        for (const auto& h : s.handlers) statement(h, indent);
                        if (!s.orelse.empty()) {
                            line(indent, "else:");
                            block(s.orelse, indent + 1);
                        }
                        if (!s.finalbody.empty()) {
                            line(indent, "finally:");
                            block(s.finalbody, indent + 1);
                        }
                        return;
                    case stmt_kind::except_handler: {
                        std::string text = "except";
                        if (!s.value.is(expr_kind::empty)) text += " " + expr_text(s.value, p_test);
                        if (!s.name.empty()) text += " as " + s.name;
                        line(indent, text + ":");
                        block(s.body, indent + 1);
                        return;
                    }
                    case stmt_kind::with: {
                        std::string text = std::string(s.is_async ? "async " : "") + "with ";
                        for (std::size_t i = 0; i < s.exprs.size(); ++i) {
                            if (i) text += ", ";
                            text += expr_text(s.exprs[i], p_test);
                            if (i < s.targets.size() && !s.targets[i].is(expr_kind::empty))
                                text += " as " + expr_text(s.targets[i], p_atom);
                        }
                        line(indent, text + ":");
                        block(s.body, indent + 1);
                        return;
                    }
                }
            }
        };

    }  // namespace

    std::string unparse(const expr& e) {
        printer p;
        p.emit(e, p_tuple);
        return p.out;
    }

    std::string unparse(const std::vector<stmt>& body, int indent) {
        printer p;
        for (const auto& s : body) p.statement(s, indent);
        return p.out;
    }

    std::string unparse(const module& m) { return unparse(m.body, 0); }

}  // namespace tracescope::python
