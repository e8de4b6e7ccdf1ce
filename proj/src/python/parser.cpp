#include "tracescope/python/parser.hpp"

#include "tracescope/error.hpp"
#include "tracescope/python/lexer.hpp"

#include <set>

namespace tracescope::python {

    namespace {

        const std::set<std::string> aug_ops{"+=", "-=", "*=", "/=", "//=", "%=", "**=", ">>=", "<<=",
                                            "&=", "^=", "|=", "@="};

        class parser {
          public:
            explicit parser(std::vector<token> tokens) : toks_(std::move(tokens)) {}

            module parse_file() {
                module m;
                while (!at_end()) {
                    if (peek().kind == token_kind::newline) {
                        ++pos_;
                        continue;
                    }
                    parse_statement(m.body);
                }
                return m;
            }

            expr parse_single_expression() {
                while (peek().kind == token_kind::newline) ++pos_;
                auto e = parse_testlist_star_expr();
                while (peek().kind == token_kind::newline) ++pos_;
                if (!at_end()) fail_at(peek(), "unexpected trailing input");
                return e;
            }

          private:
            std::vector<token> toks_;
            std::size_t pos_{0};

            const token& peek(std::size_t ahead = 0) const {
                auto idx = std::min(pos_ + ahead, toks_.size() - 1);
                return toks_[idx];
            }
            const token& prev() const { return toks_[pos_ == 0 ? 0 : pos_ - 1]; }
            bool at_end() const { return peek().kind == token_kind::end; }

            [[noreturn]] void fail_at(const token& t, const std::string& msg) const {
                throw error(error_code::parse_error, std::to_string(t.line) + ":" + std::to_string(t.col) + ": " + msg);
            }

            bool check_op(std::string_view op, std::size_t ahead = 0) const {
                const auto& t = peek(ahead);
                return t.kind == token_kind::op && t.text == op;
            }
            bool check_kw(std::string_view kw, std::size_t ahead = 0) const {
                const auto& t = peek(ahead);
                return t.kind == token_kind::name && t.text == kw;
            }
            bool accept_op(std::string_view op) {
                if (!check_op(op)) return false;
                ++pos_;
                return true;
            }
            bool accept_kw(std::string_view kw) {
                if (!check_kw(kw)) return false;
                ++pos_;
                return true;
            }
            const token& expect_op(std::string_view op) {
                if (!check_op(op)) fail_at(peek(), "expected '" + std::string(op) + "'");
                return toks_[pos_++];
            }
            const token& expect_kw(std::string_view kw) {
                if (!check_kw(kw)) fail_at(peek(), "expected '" + std::string(kw) + "'");
                return toks_[pos_++];
            }
            std::string expect_name() {
                const auto& t = peek();
                if (t.kind != token_kind::name || is_keyword(t.text)) fail_at(t, "expected identifier");
                ++pos_;
                return t.text;
            }
            void expect_newline() {
                if (peek().kind == token_kind::newline) {
                    ++pos_;
                    return;
                }
                if (at_end()) return;
                fail_at(peek(), "expected end of line");
            }

            position start_pos() const { return {peek().line, peek().col, 0, 0}; }
            void finish(position& p) const {
                p.end_line = prev().end_line;
                p.end_col = prev().end_col;
            }
            template <typename Node>
            Node finished(Node n) const {
                finish(n.pos);
                return n;
            }

            // ---------------------------------------------------------------- statements

            void parse_statement(std::vector<stmt>& out) {
                const auto& t = peek();
                if (t.kind == token_kind::indent) fail_at(t, "unexpected indent");
                if (t.kind == token_kind::name) {
                    const auto& w = t.text;
                    if (w == "if") return out.push_back(parse_if());
                    if (w == "while") return out.push_back(parse_while());
                    if (w == "for") return out.push_back(parse_for(false));
                    if (w == "try") return out.push_back(parse_try());
                    if (w == "with") return out.push_back(parse_with(false));
                    if (w == "def") return out.push_back(parse_def({}, false));
                    if (w == "class") return out.push_back(parse_class({}));
                    if (w == "async" && (check_kw("def", 1) || check_kw("for", 1) || check_kw("with", 1))) {
                        auto p = start_pos();
                        ++pos_;
                        stmt s;
                        if (check_kw("def")) s = parse_def({}, true);
                        else if (check_kw("for")) s = parse_for(true);
                        else s = parse_with(true);
                        s.pos.line = p.line;
                        s.pos.col = p.col;
                        return out.push_back(std::move(s));
                    }
                }
                if (check_op("@")) return out.push_back(parse_decorated());
                parse_simple_statements(out);
            }

            void parse_simple_statements(std::vector<stmt>& out) {
                out.push_back(parse_small_statement());
                while (accept_op(";")) {
                    if (peek().kind == token_kind::newline || at_end()) break;
                    out.push_back(parse_small_statement());
                }
                expect_newline();
            }

            std::vector<stmt> parse_suite() {
                expect_op(":");
                std::vector<stmt> body;
                if (peek().kind != token_kind::newline) {
                    parse_simple_statements(body);
                    return body;
                }
                ++pos_;
                if (peek().kind != token_kind::indent) fail_at(peek(), "expected an indented block");
                ++pos_;
                while (peek().kind != token_kind::dedent && !at_end()) {
                    if (peek().kind == token_kind::newline) {
                        ++pos_;
                        continue;
                    }
                    parse_statement(body);
                }
                if (peek().kind == token_kind::dedent) ++pos_;
                return body;
            }

            stmt parse_small_statement() {
                stmt s;
                s.pos = start_pos();
                const auto& t = peek();
                if (t.kind == token_kind::name) {
                    const auto& w = t.text;
                    if (w == "pass") {
                        ++pos_;
                        s.kind = stmt_kind::pass;
                        return finished(std::move(s));
                    }
                    if (w == "break") {
                        ++pos_;
                        s.kind = stmt_kind::break_;
                        return finished(std::move(s));
                    }
                    if (w == "continue") {
                        ++pos_;
                        s.kind = stmt_kind::continue_;
                        return finished(std::move(s));
                    }
                    if (w == "return") {
                        ++pos_;
                        s.kind = stmt_kind::return_;
                        if (!at_statement_end()) s.value = parse_testlist_star_expr();
                        return finished(std::move(s));
                    }
                    if (w == "raise") {
                        ++pos_;
                        s.kind = stmt_kind::raise;
                        if (!at_statement_end()) {
                            s.exprs.push_back(parse_test());
                            if (accept_kw("from")) s.exprs.push_back(parse_test());
                        }
                        return finished(std::move(s));
                    }
                    if (w == "global" || w == "nonlocal") {
                        ++pos_;
                        s.kind = w == "global" ? stmt_kind::global : stmt_kind::nonlocal;
                        s.names.push_back(expect_name());
                        while (accept_op(",")) s.names.push_back(expect_name());
                        return finished(std::move(s));
                    }
                    if (w == "del") {
                        ++pos_;
                        s.kind = stmt_kind::del;
                        s.targets.push_back(parse_exprlist());
                        return finished(std::move(s));
                    }
                    if (w == "assert") {
                        ++pos_;
                        s.kind = stmt_kind::assert_;
                        s.exprs.push_back(parse_test());
                        if (accept_op(",")) s.exprs.push_back(parse_test());
                        return finished(std::move(s));
                    }
                    if (w == "import") return parse_import();
                    if (w == "from") return parse_import_from();
                }
                return parse_expr_statement();
            }

            bool at_statement_end() const {
                return peek().kind == token_kind::newline || at_end() || check_op(";");
            }

            stmt parse_import() {
                stmt s;
                s.pos = start_pos();
                expect_kw("import");
                s.kind = stmt_kind::import;
                do {
                    s.names.push_back(parse_dotted_name());
                    s.aliases.push_back(accept_kw("as") ? expect_name() : std::string());
                } while (accept_op(","));
                return finished(std::move(s));
            }

            std::string parse_dotted_name() {
                auto name = expect_name();
                while (accept_op(".")) name += "." + expect_name();
                return name;
            }

            stmt parse_import_from() {
                stmt s;
                s.pos = start_pos();
                expect_kw("from");
                s.kind = stmt_kind::import_from;
                std::string module;
                while (check_op(".") || check_op("...")) module += toks_[pos_++].text;
                if (!check_kw("import")) module += parse_dotted_name();
                s.op = module;
                expect_kw("import");
                if (accept_op("*")) {
                    s.names.push_back("*");
                    s.aliases.push_back("");
                    return finished(std::move(s));
                }
                bool paren = accept_op("(");
                do {
                    if (paren && check_op(")")) break;
                    s.names.push_back(expect_name());
                    s.aliases.push_back(accept_kw("as") ? expect_name() : std::string());
                } while (accept_op(","));
                if (paren) expect_op(")");
                return finished(std::move(s));
            }

            stmt parse_expr_statement() {
                stmt s;
                s.pos = start_pos();
                auto first = check_kw("yield") ? parse_yield() : parse_testlist_star_expr();
                if (check_op(":")) {
                    ++pos_;
                    s.kind = stmt_kind::ann_assign;
                    s.targets.push_back(std::move(first));
                    s.exprs.push_back(parse_test());
                    if (accept_op("=")) s.value = check_kw("yield") ? parse_yield() : parse_testlist_star_expr();
                    return finished(std::move(s));
                }
                if (peek().kind == token_kind::op && aug_ops.contains(peek().text)) {
                    s.kind = stmt_kind::aug_assign;
                    s.op = toks_[pos_++].text;
                    s.targets.push_back(std::move(first));
                    s.value = check_kw("yield") ? parse_yield() : parse_testlist_star_expr();
                    return finished(std::move(s));
                }
                if (check_op("=")) {
                    s.kind = stmt_kind::assign;
                    std::vector<expr> chain{std::move(first)};
                    while (accept_op("=")) chain.push_back(check_kw("yield") ? parse_yield() : parse_testlist_star_expr());
                    s.value = std::move(chain.back());
                    chain.pop_back();
                    s.targets = std::move(chain);
                    return finished(std::move(s));
                }
                s.kind = stmt_kind::expr;
                s.value = std::move(first);
                return finished(std::move(s));
            }

            stmt parse_if() {
                stmt s;
                s.pos = start_pos();
                s.kind = stmt_kind::if_;
                ++pos_;  // if / elif
                s.value = parse_namedexpr_test();
                s.body = parse_suite();
                if (check_kw("elif")) {
                    auto nested = parse_if();
                    nested.is_elif = true;
                    s.orelse.push_back(std::move(nested));
                } else if (accept_kw("else")) {
                    s.orelse = parse_suite();
                }
                return finished(std::move(s));
            }

            stmt parse_while() {
                stmt s;
                s.pos = start_pos();
                s.kind = stmt_kind::while_;
                expect_kw("while");
                s.value = parse_namedexpr_test();
                s.body = parse_suite();
                if (accept_kw("else")) s.orelse = parse_suite();
                return finished(std::move(s));
            }

            stmt parse_for(bool is_async) {
                stmt s;
                s.pos = start_pos();
                s.kind = stmt_kind::for_;
                s.is_async = is_async;
                expect_kw("for");
                s.targets.push_back(parse_exprlist());
                expect_kw("in");
                s.value = parse_testlist();
                s.body = parse_suite();
                if (accept_kw("else")) s.orelse = parse_suite();
                return finished(std::move(s));
            }

            stmt parse_try() {
                stmt s;
                s.pos = start_pos();
                s.kind = stmt_kind::try_;
                expect_kw("try");
                s.body = parse_suite();
                while (check_kw("except")) {
                    stmt h;
                    h.pos = start_pos();
                    h.kind = stmt_kind::except_handler;
                    ++pos_;
                    if (!check_op(":")) {
                        h.value = parse_test();
                        if (accept_kw("as")) h.name = expect_name();
                    }
                    h.body = parse_suite();
                    s.handlers.push_back(finished(std::move(h)));
                }
                if (accept_kw("else")) s.orelse = parse_suite();
                if (accept_kw("finally")) s.finalbody = parse_suite();
                if (s.handlers.empty() && s.finalbody.empty()) fail_at(peek(), "expected 'except' or 'finally' block");
                return finished(std::move(s));
            }

            stmt parse_with(bool is_async) {
                stmt s;
                s.pos = start_pos();
                s.kind = stmt_kind::with;
                s.is_async = is_async;
                expect_kw("with");
                do {
                    s.exprs.push_back(parse_test());
                    s.targets.push_back(accept_kw("as") ? parse_expr() : expr{});
                } while (accept_op(","));
                s.body = parse_suite();
                return finished(std::move(s));
            }

            stmt parse_decorated() {
                std::vector<expr> decorators;
                auto p = start_pos();
                while (accept_op("@")) {
                    decorators.push_back(parse_namedexpr_test());
                    expect_newline();
                }
                stmt s;
                if (check_kw("def")) {
                    s = parse_def(std::move(decorators), false);
                } else if (check_kw("async") && check_kw("def", 1)) {
                    ++pos_;
                    s = parse_def(std::move(decorators), true);
                } else if (check_kw("class")) {
                    s = parse_class(std::move(decorators));
                } else {
                    fail_at(peek(), "expected function or class after decorator");
                }
                s.pos.line = p.line;
                s.pos.col = p.col;
                return s;
            }

            stmt parse_def(std::vector<expr> decorators, bool is_async) {
                stmt s;
                s.pos = start_pos();
                s.kind = stmt_kind::function_def;
                s.is_async = is_async;
                s.decorators = std::move(decorators);
                expect_kw("def");
                s.name = expect_name();
                expect_op("(");
                s.exprs.push_back(parse_parameters(")", true));
                expect_op(")");
                s.exprs.push_back(accept_op("->") ? parse_test() : expr{});
                s.body = parse_suite();
                return finished(std::move(s));
            }

            stmt parse_class(std::vector<expr> decorators) {
                stmt s;
                s.pos = start_pos();
                s.kind = stmt_kind::class_def;
                s.decorators = std::move(decorators);
                expect_kw("class");
                s.name = expect_name();
                if (accept_op("(")) {
                    s.exprs = parse_arglist();
                    expect_op(")");
                }
                s.body = parse_suite();
                return finished(std::move(s));
            }

            // Parameters up to (not including) `closer`.
            expr parse_parameters(std::string_view closer, bool annotations) {
                expr args;
                args.kind = expr_kind::arguments;
                args.pos = start_pos();
                while (!check_op(closer)) {
                    expr p;
                    p.kind = expr_kind::param;
                    p.pos = start_pos();
                    if (accept_op("/")) {
                        p.ops = {"/"};
                    } else if (accept_op("**")) {
                        p.ops = {"**"};
                        p.text = expect_name();
                    } else if (accept_op("*")) {
                        p.ops = {"*"};
                        if (!check_op(",") && !check_op(closer)) p.text = expect_name();
                    } else {
                        p.text = expect_name();
                    }
                    if (!p.text.empty() && annotations && accept_op(":")) {
                        p.flags |= flag_has_annotation;
                        p.items.push_back(parse_test());
                    }
                    if (!p.text.empty() && accept_op("=")) {
                        p.flags |= flag_has_default;
                        p.items.push_back(parse_test());
                    }
                    args.items.push_back(finished(std::move(p)));
                    if (!accept_op(",")) break;
                }
                return finished(std::move(args));
            }

            // ---------------------------------------------------------------- expressions

            expr make(expr_kind kind, position p) {
                expr e;
                e.kind = kind;
                e.pos = p;
                return e;
            }

            bool starts_expression() const {
                const auto& t = peek();
                if (t.kind == token_kind::name) {
                    if (!is_keyword(t.text)) return true;
                    return t.text == "None" || t.text == "True" || t.text == "False" || t.text == "not" ||
                           t.text == "lambda" || t.text == "await" || t.text == "yield";
                }
                if (t.kind == token_kind::number || t.kind == token_kind::string) return true;
                if (t.kind == token_kind::op) {
                    return t.text == "(" || t.text == "[" || t.text == "{" || t.text == "-" || t.text == "+" ||
                           t.text == "~" || t.text == "*" || t.text == "..." || t.text == "**";
                }
                return false;
            }

            expr parse_yield() {
                auto p = start_pos();
                expect_kw("yield");
                if (accept_kw("from")) {
                    auto e = make(expr_kind::yield_from, p);
                    e.items.push_back(parse_test());
                    return finished(std::move(e));
                }
                auto e = make(expr_kind::yield, p);
                if (!at_statement_end() && !check_op(")") && !check_op("=") && starts_expression())
                    e.items.push_back(parse_testlist_star_expr());
                else
                    e.items.push_back(expr{});
                return finished(std::move(e));
            }

            // Comma-separated list that becomes a tuple when a comma is present.
            template <typename Item>
            expr parse_comma_list(Item item, bool allow_trailing_stop) {
                auto p = start_pos();
                auto first = item();
                if (!check_op(",")) return first;
                auto t = make(expr_kind::tuple, p);
                t.items.push_back(std::move(first));
                while (accept_op(",")) {
                    if (allow_trailing_stop && !starts_expression()) break;
                    t.items.push_back(item());
                }
                return finished(std::move(t));
            }

            expr parse_testlist_star_expr() {
                return parse_comma_list([this] { return check_op("*") ? parse_star_expr() : parse_test(); }, true);
            }
            expr parse_testlist() {
                return parse_comma_list([this] { return check_op("*") ? parse_star_expr() : parse_test(); }, true);
            }
            expr parse_exprlist() {
                return parse_comma_list([this] { return check_op("*") ? parse_star_expr() : parse_expr(); }, true);
            }

            expr parse_star_expr() {
                auto p = start_pos();
                expect_op("*");
                auto e = make(expr_kind::starred, p);
                e.items.push_back(parse_expr());
                return finished(std::move(e));
            }

            expr parse_namedexpr_test() {
                auto p = start_pos();
                auto e = parse_test();
                if (check_op(":=")) {
                    ++pos_;
                    if (!e.is(expr_kind::name)) fail_at(prev(), "cannot use assignment expression here");
                    auto n = make(expr_kind::named, p);
                    n.items.push_back(std::move(e));
                    n.items.push_back(parse_test());
                    return finished(std::move(n));
                }
                return e;
            }

            expr parse_test() {
                if (check_kw("lambda")) return parse_lambda(true);
                auto p = start_pos();
                auto body = parse_or_test();
                if (check_kw("if")) {
                    ++pos_;
                    auto test = parse_or_test();
                    expect_kw("else");
                    auto orelse = parse_test();
                    auto e = make(expr_kind::ifexp, p);
                    e.items.push_back(std::move(body));
                    e.items.push_back(std::move(test));
                    e.items.push_back(std::move(orelse));
                    return finished(std::move(e));
                }
                return body;
            }

            expr parse_test_nocond() {
                if (check_kw("lambda")) return parse_lambda(false);
                return parse_or_test();
            }

            expr parse_lambda(bool full) {
                auto p = start_pos();
                expect_kw("lambda");
                auto e = make(expr_kind::lambda, p);
                e.items.push_back(parse_parameters(":", false));
                expect_op(":");
                e.items.push_back(full ? parse_test() : parse_test_nocond());
                return finished(std::move(e));
            }

            expr parse_boolop(std::string_view op, expr (parser::*next)()) {
                auto p = start_pos();
                auto first = (this->*next)();
                if (!check_kw(op)) return first;
                auto e = make(expr_kind::boolop, p);
                e.text = std::string(op);
                e.items.push_back(std::move(first));
                while (accept_kw(op)) e.items.push_back((this->*next)());
                return finished(std::move(e));
            }
            expr parse_or_test() { return parse_boolop("or", &parser::parse_and_test); }
            expr parse_and_test() { return parse_boolop("and", &parser::parse_not_test); }

            expr parse_not_test() {
                if (check_kw("not")) {
                    auto p = start_pos();
                    ++pos_;
                    auto e = make(expr_kind::unaryop, p);
                    e.text = "not";
                    e.items.push_back(parse_not_test());
                    return finished(std::move(e));
                }
                return parse_comparison();
            }

            bool comparison_op(std::string& out) {
                const auto& t = peek();
                if (t.kind == token_kind::op &&
                    (t.text == "<" || t.text == ">" || t.text == "==" || t.text == ">=" || t.text == "<=" ||
                     t.text == "!=")) {
                    out = t.text;
                    ++pos_;
                    return true;
                }
                if (check_kw("in")) {
                    ++pos_;
                    out = "in";
                    return true;
                }
                if (check_kw("not") && check_kw("in", 1)) {
                    pos_ += 2;
                    out = "not in";
                    return true;
                }
                if (check_kw("is")) {
                    ++pos_;
                    out = accept_kw("not") ? "is not" : "is";
                    return true;
                }
                return false;
            }

            expr parse_comparison() {
                auto p = start_pos();
                auto first = parse_expr();
                std::string op;
                if (!comparison_op(op)) return first;
                auto e = make(expr_kind::compare, p);
                e.items.push_back(std::move(first));
                do {
                    e.ops.push_back(op);
                    e.items.push_back(parse_expr());
                } while (comparison_op(op));
                return finished(std::move(e));
            }

            expr parse_binary(std::initializer_list<std::string_view> ops, expr (parser::*next)()) {
                auto p = start_pos();
                auto left = (this->*next)();
                while (true) {
                    const auto& t = peek();
                    bool matched = false;
                    if (t.kind == token_kind::op) {
                        for (auto op : ops) matched = matched || t.text == op;
                    }
                    if (!matched) return left;
                    auto e = make(expr_kind::binop, p);
                    e.text = toks_[pos_++].text;
                    e.items.push_back(std::move(left));
                    e.items.push_back((this->*next)());
                    left = finished(std::move(e));
                }
            }
            expr parse_expr() { return parse_binary({"|"}, &parser::parse_xor); }
            expr parse_xor() { return parse_binary({"^"}, &parser::parse_and); }
            expr parse_and() { return parse_binary({"&"}, &parser::parse_shift); }
            expr parse_shift() { return parse_binary({"<<", ">>"}, &parser::parse_arith); }
            expr parse_arith() { return parse_binary({"+", "-"}, &parser::parse_term); }
            expr parse_term() { return parse_binary({"*", "/", "//", "%", "@"}, &parser::parse_factor); }

            expr parse_factor() {
                if (check_op("-") || check_op("+") || check_op("~")) {
                    auto p = start_pos();
                    auto e = make(expr_kind::unaryop, p);
                    e.text = toks_[pos_++].text;
                    e.items.push_back(parse_factor());
                    return finished(std::move(e));
                }
                return parse_power();
            }

            expr parse_power() {
                auto p = start_pos();
                auto base = parse_await_primary();
                if (check_op("**")) {
                    ++pos_;
                    auto e = make(expr_kind::binop, p);
                    e.text = "**";
                    e.items.push_back(std::move(base));
                    e.items.push_back(parse_factor());
                    return finished(std::move(e));
                }
                return base;
            }

            expr parse_await_primary() {
                if (check_kw("await")) {
                    auto p = start_pos();
                    ++pos_;
                    auto e = make(expr_kind::await, p);
                    e.items.push_back(parse_primary());
                    return finished(std::move(e));
                }
                return parse_primary();
            }

            expr parse_primary() {
                auto p = start_pos();
                auto e = parse_atom();
                while (true) {
                    if (check_op("(")) {
                        ++pos_;
                        auto call = make(expr_kind::call, p);
                        call.items.push_back(std::move(e));
                        for (auto& a : parse_arglist()) call.items.push_back(std::move(a));
                        expect_op(")");
                        e = finished(std::move(call));
                    } else if (check_op("[")) {
                        ++pos_;
                        auto sub = make(expr_kind::subscript, p);
                        sub.items.push_back(std::move(e));
                        sub.items.push_back(parse_subscript_list());
                        expect_op("]");
                        e = finished(std::move(sub));
                    } else if (check_op(".")) {
                        ++pos_;
                        auto attr = make(expr_kind::attribute, p);
                        attr.items.push_back(std::move(e));
                        attr.text = expect_name();
                        e = finished(std::move(attr));
                    } else {
                        return e;
                    }
                }
            }

            expr parse_subscript_list() {
                auto p = start_pos();
                auto first = parse_subscript();
                if (!check_op(",")) return first;
                auto t = make(expr_kind::tuple, p);
                t.items.push_back(std::move(first));
                while (accept_op(",")) {
                    if (check_op("]")) break;
                    t.items.push_back(parse_subscript());
                }
                return finished(std::move(t));
            }

            expr parse_subscript() {
                auto p = start_pos();
                expr lower;
                if (!check_op(":")) {
                    lower = check_op("*") ? parse_star_expr() : parse_namedexpr_test();
                    if (!check_op(":")) return lower;
                }
                expect_op(":");
                auto s = make(expr_kind::slice, p);
                s.items.push_back(std::move(lower));
                s.items.push_back(check_op(":") || check_op("]") || check_op(",") ? expr{} : parse_test());
                if (accept_op(":")) {
                    s.items.push_back(check_op("]") || check_op(",") ? expr{} : parse_test());
                } else {
                    s.items.push_back(expr{});
                }
                return finished(std::move(s));
            }

            std::vector<expr> parse_arglist() {
                std::vector<expr> args;
                while (!check_op(")")) {
                    auto p = start_pos();
                    if (accept_op("**")) {
                        auto e = make(expr_kind::double_starred, p);
                        e.items.push_back(parse_test());
                        args.push_back(finished(std::move(e)));
                    } else if (accept_op("*")) {
                        auto e = make(expr_kind::starred, p);
                        e.items.push_back(parse_test());
                        args.push_back(finished(std::move(e)));
                    } else if (peek().kind == token_kind::name && !is_keyword(peek().text) && check_op("=", 1)) {
                        auto e = make(expr_kind::keyword, p);
                        e.text = expect_name();
                        expect_op("=");
                        e.items.push_back(parse_test());
                        args.push_back(finished(std::move(e)));
                    } else {
                        auto value = parse_namedexpr_test();
                        if (check_kw("for") || (check_kw("async") && check_kw("for", 1))) {
                            auto g = make(expr_kind::generator, p);
                            g.items.push_back(std::move(value));
                            parse_comp_fors(g);
                            args.push_back(finished(std::move(g)));
                        } else {
                            args.push_back(std::move(value));
                        }
                    }
                    if (!accept_op(",")) break;
                }
                return args;
            }

            void parse_comp_fors(expr& comp) {
                while (check_kw("for") || (check_kw("async") && check_kw("for", 1))) {
                    auto p = start_pos();
                    auto f = make(expr_kind::comp_for, p);
                    if (accept_kw("async")) f.flags |= flag_async;
                    expect_kw("for");
                    f.items.push_back(parse_exprlist());
                    expect_kw("in");
                    f.items.push_back(parse_or_test());
                    while (check_kw("if")) {
                        ++pos_;
                        f.items.push_back(parse_test_nocond());
                    }
                    comp.items.push_back(finished(std::move(f)));
                }
            }

            expr parse_atom() {
                auto p = start_pos();
                const auto& t = peek();
                switch (t.kind) {
                    case token_kind::number: {
                        ++pos_;
                        auto e = make(expr_kind::constant, p);
                        e.text = t.text;
                        return finished(std::move(e));
                    }
                    case token_kind::string: {
                        auto e = make(expr_kind::constant, p);
                        e.text = toks_[pos_++].text;
                        while (peek().kind == token_kind::string) e.text += " " + toks_[pos_++].text;
                        return finished(std::move(e));
                    }
                    case token_kind::name: {
                        if (t.text == "None" || t.text == "True" || t.text == "False") {
                            ++pos_;
                            auto e = make(expr_kind::constant, p);
                            e.text = t.text;
                            return finished(std::move(e));
                        }
                        if (is_keyword(t.text)) fail_at(t, "invalid syntax near '" + t.text + "'");
                        ++pos_;
                        auto e = make(expr_kind::name, p);
                        e.text = t.text;
                        return finished(std::move(e));
                    }
                    case token_kind::op: break;
                    default: fail_at(t, "invalid syntax");
                }
                if (accept_op("...")) {
                    auto e = make(expr_kind::constant, p);
                    e.text = "...";
                    return finished(std::move(e));
                }
                if (accept_op("(")) {
                    if (accept_op(")")) return finished(make(expr_kind::tuple, p));
                    if (check_kw("yield")) {
                        auto y = parse_yield();
                        expect_op(")");
                        return y;
                    }
                    auto first = check_op("*") ? parse_star_expr() : parse_namedexpr_test();
                    if (check_kw("for") || (check_kw("async") && check_kw("for", 1))) {
                        auto g = make(expr_kind::generator, p);
                        g.items.push_back(std::move(first));
                        parse_comp_fors(g);
                        expect_op(")");
                        return finished(std::move(g));
                    }
                    if (accept_op(")")) {
                        first.flags |= flag_parenthesized;
                        return first;
                    }
                    auto tup = make(expr_kind::tuple, p);
                    tup.items.push_back(std::move(first));
                    while (accept_op(",")) {
                        if (check_op(")")) break;
                        tup.items.push_back(check_op("*") ? parse_star_expr() : parse_namedexpr_test());
                    }
                    expect_op(")");
                    tup.flags |= flag_parenthesized;
                    return finished(std::move(tup));
                }
                if (accept_op("[")) {
                    auto lst = make(expr_kind::list, p);
                    if (accept_op("]")) return finished(std::move(lst));
                    auto first = check_op("*") ? parse_star_expr() : parse_namedexpr_test();
                    if (check_kw("for") || (check_kw("async") && check_kw("for", 1))) {
                        auto c = make(expr_kind::list_comp, p);
                        c.items.push_back(std::move(first));
                        parse_comp_fors(c);
                        expect_op("]");
                        return finished(std::move(c));
                    }
                    lst.items.push_back(std::move(first));
                    while (accept_op(",")) {
                        if (check_op("]")) break;
                        lst.items.push_back(check_op("*") ? parse_star_expr() : parse_namedexpr_test());
                    }
                    expect_op("]");
                    return finished(std::move(lst));
                }
                if (accept_op("{")) return parse_brace(p);
                fail_at(t, "invalid syntax near '" + t.text + "'");
            }

            expr parse_brace(position p) {
                if (accept_op("}")) return finished(make(expr_kind::dict, p));
                auto entry_start = start_pos();
                bool is_dict = false;
                expr first;
                if (accept_op("**")) {
                    is_dict = true;
                    first = make(expr_kind::double_starred, entry_start);
                    first.items.push_back(parse_expr());
                    first = finished(std::move(first));
                } else {
                    auto key = check_op("*") ? parse_star_expr() : parse_namedexpr_test();
                    if (accept_op(":")) {
                        is_dict = true;
                        first = make(expr_kind::dict_pair, entry_start);
                        first.items.push_back(std::move(key));
                        first.items.push_back(parse_test());
                        first = finished(std::move(first));
                    } else {
                        first = std::move(key);
                    }
                }
                if (check_kw("for") || (check_kw("async") && check_kw("for", 1))) {
                    if (is_dict && first.is(expr_kind::dict_pair)) {
                        auto c = make(expr_kind::dict_comp, p);
                        c.items.push_back(std::move(first.items[0]));
                        c.items.push_back(std::move(first.items[1]));
                        parse_comp_fors(c);
                        expect_op("}");
                        return finished(std::move(c));
                    }
                    if (is_dict) fail_at(peek(), "dict unpacking cannot be used in a comprehension");
                    auto c = make(expr_kind::set_comp, p);
                    c.items.push_back(std::move(first));
                    parse_comp_fors(c);
                    expect_op("}");
                    return finished(std::move(c));
                }
                auto container = make(is_dict ? expr_kind::dict : expr_kind::set, p);
                container.items.push_back(std::move(first));
                while (accept_op(",")) {
                    if (check_op("}")) break;
                    auto s = start_pos();
                    if (is_dict) {
                        if (accept_op("**")) {
                            auto d = make(expr_kind::double_starred, s);
                            d.items.push_back(parse_expr());
                            container.items.push_back(finished(std::move(d)));
                        } else {
                            auto pair = make(expr_kind::dict_pair, s);
                            pair.items.push_back(parse_test());
                            expect_op(":");
                            pair.items.push_back(parse_test());
                            container.items.push_back(finished(std::move(pair)));
                        }
                    } else {
                        container.items.push_back(check_op("*") ? parse_star_expr() : parse_namedexpr_test());
                    }
                }
                expect_op("}");
                return finished(std::move(container));
            }
        };

    }  // namespace

    module parse_module(std::string_view source) { return parser(tokenize(source)).parse_file(); }

    expr parse_expression(std::string_view source) { return parser(tokenize(source)).parse_single_expression(); }

}  // namespace tracescope::python
