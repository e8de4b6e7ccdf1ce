#include "tracescope/python/ast.hpp"

namespace tracescope::python {

    expr make_name(std::string id, position pos) {
        expr e;
        e.kind = expr_kind::name;
        e.text = std::move(id);
        e.pos = pos;
        return e;
    }

    expr make_constant(std::string literal, position pos) {
        expr e;
        e.kind = expr_kind::constant;
        e.text = std::move(literal);
        e.pos = pos;
        return e;
    }

    expr make_string(std::string_view text, position pos) { return make_constant(quote_string(text), pos); }

    expr make_call(expr callee, std::vector<expr> args, position pos) {
        expr e;
        e.kind = expr_kind::call;
        e.pos = pos;
        e.items.push_back(std::move(callee));
        for (auto& a : args) e.items.push_back(std::move(a));
        return e;
    }

    expr make_attribute(expr base, std::string attr, position pos) {
        expr e;
        e.kind = expr_kind::attribute;
        e.pos = pos;
        e.text = std::move(attr);
        e.items.push_back(std::move(base));
        return e;
    }

    stmt make_assign(expr target, expr value, position pos) {
        stmt s;
        s.kind = stmt_kind::assign;
        s.pos = pos;
        s.targets.push_back(std::move(target));
        s.value = std::move(value);
        return s;
    }

    stmt make_expr_stmt(expr value, position pos) {
        stmt s;
        s.kind = stmt_kind::expr;
        s.pos = pos;
        s.value = std::move(value);
        return s;
    }

    std::string quote_string(std::string_view text) {
        std::string out = "'";
        static const char* hex = "0123456789abcdef";
        for (unsigned char c : text) {
            switch (c) {
                case '\\': out += "\\\\"; break;
                case '\'': out += "\\'"; break;
                case '\n': out += "\\n"; break;
                case '\r': out += "\\r"; break;
                case '\t': out += "\\t"; break;
                default:
                    if (c < 0x20 || c == 0x7f) {
                        out += "\\x";
                        out.push_back(hex[c >> 4]);
                        out.push_back(hex[c & 0xf]);
                    } else {
                        out.push_back(static_cast<char>(c));
                    }
            }
        }
        out += "'";
        return out;
    }

}  // namespace tracescope::python
