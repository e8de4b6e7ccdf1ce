#include "tracescope/python/lexer.hpp"

#include "tracescope/error.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace tracescope::python {

    namespace {

        constexpr std::array keywords{"False",  "None",     "True",  "and",    "as",     "assert", "async",
                                      "await",  "break",    "class", "continue", "def",  "del",    "elif",
                                      "else",   "except",   "finally", "for",  "from",   "global", "if",
                                      "import", "in",       "is",    "lambda", "nonlocal", "not", "or",
                                      "pass",   "raise",    "return", "try",   "while",  "with",   "yield"};

        // Longest first so that greedy matching works.
        constexpr std::array operators{"**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "<<", ">>",
                                       "<=",  ">=",  "==",  "!=",  "+=",  "-=", "*=", "/=", "%=", "&=", "|=",
                                       "^=",  "@=",  "+",   "-",   "*",   "/",  "%",  "@",  "&",  "|",  "^",
                                       "~",   "<",   ">",   "(",   ")",   "[",  "]",  "{",  "}",  ",",  ":",
                                       ".",   ";",   "="};

        bool ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
        bool ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

        bool is_string_prefix(std::string_view p) {
            if (p.size() > 2) return false;
            std::string lower;
            for (char c : p) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
            return lower == "r" || lower == "u" || lower == "f" || lower == "b" || lower == "br" || lower == "rb" ||
                   lower == "fr" || lower == "rf";
        }

        class lexer {
          public:
            explicit lexer(std::string_view src) : src_(src) {}

            std::vector<token> run() {
                bool at_line_start = true;
                while (pos_ < src_.size()) {
                    if (at_line_start && depth_ == 0) {
                        if (!handle_indentation()) break;
                        at_line_start = false;
                        continue;
                    }
                    char c = src_[pos_];
                    if (c == '\n') {
                        advance();
                        if (depth_ == 0) {
                            if (line_has_tokens_) push(token_kind::newline, "\n", line_ - 1, col_before_newline_);
                            line_has_tokens_ = false;
                            at_line_start = true;
                        }
                        continue;
                    }
                    if (c == '\r') {
                        ++pos_;
                        continue;
                    }
                    if (c == ' ' || c == '\t' || c == '\f') {
                        advance();
                        continue;
                    }
                    if (c == '#') {
                        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
                        continue;
                    }
                    if (c == '\\') {
                        auto next = pos_ + 1;
                        if (next < src_.size() && src_[next] == '\r') ++next;
                        if (next < src_.size() && src_[next] == '\n') {
                            pos_ = next;
                            advance();
                            continue;
                        }
                        fail("unexpected character after line continuation");
                    }
                    lex_token();
                }
                if (line_has_tokens_) push(token_kind::newline, "\n", line_, col_);
                while (indents_.size() > 1) {
                    indents_.pop_back();
                    push(token_kind::dedent, "", line_, 0);
                }
                push(token_kind::end, "", line_, col_);
                return std::move(tokens_);
            }

          private:
            std::string_view src_;
            std::size_t pos_{0};
            int line_{1};
            int col_{0};
            int col_before_newline_{0};
            int depth_{0};
            bool line_has_tokens_{false};
            std::vector<int> indents_{0};
            std::vector<token> tokens_;

            [[noreturn]] void fail(const std::string& msg) const {
                throw error(error_code::parse_error, std::to_string(line_) + ":" + std::to_string(col_) + ": " + msg);
            }

            void advance() {
                if (src_[pos_] == '\n') {
                    col_before_newline_ = col_;
                    ++line_;
                    col_ = 0;
                } else {
                    ++col_;
                }
                ++pos_;
            }

            void push(token_kind kind, std::string text, int line, int col) {
                token t;
                t.kind = kind;
                t.text = std::move(text);
                t.line = line;
                t.col = col;
                t.end_line = line_;
                t.end_col = col_;
                tokens_.push_back(std::move(t));
            }

            // Returns false at end of input.
            bool handle_indentation() {
                int width = 0;
                while (pos_ < src_.size()) {
                    char c = src_[pos_];
                    if (c == ' ') {
                        ++width;
                    } else if (c == '\t') {
                        width = (width / 8 + 1) * 8;
                    } else if (c == '\f') {
                        width = 0;
                    } else {
                        break;
                    }
                    advance();
                }
                if (pos_ >= src_.size()) return false;
                char c = src_[pos_];
                if (c == '\n' || c == '#' || c == '\r') return true;  // blank or comment line
                if (c == '\\') return true;
                if (width > indents_.back()) {
                    indents_.push_back(width);
                    push(token_kind::indent, "", line_, 0);
                } else {
                    while (width < indents_.back()) {
                        indents_.pop_back();
                        push(token_kind::dedent, "", line_, 0);
                    }
                    if (width != indents_.back()) fail("unindent does not match any outer indentation level");
                }
                return true;
            }

            void lex_token() {
                line_has_tokens_ = true;
                int line = line_;
                int col = col_;
                auto start = pos_;
                unsigned char c = static_cast<unsigned char>(src_[pos_]);
                if (ident_start(c)) {
                    while (pos_ < src_.size() && ident_char(static_cast<unsigned char>(src_[pos_]))) advance();
                    auto word = src_.substr(start, pos_ - start);
                    if (pos_ < src_.size() && (src_[pos_] == '"' || src_[pos_] == '\'') && is_string_prefix(word)) {
                        lex_string(start, line, col);
                        return;
                    }
                    push(token_kind::name, std::string(word), line, col);
                    return;
                }
                if (std::isdigit(c) || (c == '.' && pos_ + 1 < src_.size() &&
                                        std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
                    lex_number(start, line, col);
                    return;
                }
                if (c == '"' || c == '\'') {
                    lex_string(start, line, col);
                    return;
                }
                for (std::string_view op : operators) {
                    if (src_.substr(pos_, op.size()) == op) {
                        for (std::size_t k = 0; k < op.size(); ++k) advance();
                        if (op == "(" || op == "[" || op == "{") ++depth_;
                        if (op == ")" || op == "]" || op == "}") {
                            if (depth_ == 0) fail("unmatched '" + std::string(op) + "'");
                            --depth_;
                        }
                        push(token_kind::op, std::string(op), line, col);
                        return;
                    }
                }
                if (c == '!') fail("invalid syntax '!'");
                fail(std::string("invalid character '") + static_cast<char>(c) + "'");
            }

            void lex_number(std::size_t start, int line, int col) {
                auto more = [&](auto pred) {
                    while (pos_ < src_.size() && (pred(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                        advance();
                };
                if (src_[pos_] == '0' && pos_ + 1 < src_.size() &&
                    std::string_view("xXoObB").find(src_[pos_ + 1]) != std::string_view::npos) {
                    advance();
                    advance();
                    more([](unsigned char ch) { return std::isxdigit(ch) != 0; });
                } else {
                    more([](unsigned char ch) { return std::isdigit(ch) != 0; });
                    if (pos_ < src_.size() && src_[pos_] == '.') {
                        advance();
                        more([](unsigned char ch) { return std::isdigit(ch) != 0; });
                    }
                    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
                        auto save_pos = pos_;
                        auto save_col = col_;
                        advance();
                        if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) advance();
                        if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                            more([](unsigned char ch) { return std::isdigit(ch) != 0; });
                        } else {
                            pos_ = save_pos;
                            col_ = save_col;
                        }
                    }
                }
                if (pos_ < src_.size() && (src_[pos_] == 'j' || src_[pos_] == 'J')) advance();
                push(token_kind::number, std::string(src_.substr(start, pos_ - start)), line, col);
            }

            void lex_string(std::size_t start, int line, int col) {
                char quote = src_[pos_];
                bool triple = src_.substr(pos_, 3) == std::string(3, quote);
                auto skip = triple ? 3 : 1;
                for (int k = 0; k < skip; ++k) advance();
                while (true) {
                    if (pos_ >= src_.size()) fail("unterminated string literal");
                    char c = src_[pos_];
                    if (c == '\\') {
                        advance();
                        if (pos_ < src_.size()) advance();
                        continue;
                    }
                    if (!triple && c == '\n') fail("unterminated string literal");
                    if (c == quote) {
                        if (!triple) {
                            advance();
                            break;
                        }
                        if (src_.substr(pos_, 3) == std::string(3, quote)) {
                            advance();
                            advance();
                            advance();
                            break;
                        }
                    }
                    advance();
                }
                push(token_kind::string, std::string(src_.substr(start, pos_ - start)), line, col);
            }
        };

    }  // namespace

    bool is_keyword(std::string_view word) {
        return std::find(keywords.begin(), keywords.end(), word) != keywords.end();
    }

    std::vector<token> tokenize(std::string_view source) { return lexer(source).run(); }

}  // namespace tracescope::python
