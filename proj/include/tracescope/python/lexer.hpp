#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tracescope::python {

    enum class token_kind { name, number, string, op, newline, indent, dedent, end };

    struct token {
        token_kind kind{token_kind::end};
        std::string text{};
        int line{0};  // 1-based
        int col{0};   // 0-based
        int end_line{0};
        int end_col{0};
    };

    // Tokenizes Python source. Comments and blank lines are dropped;
    // bracketed and backslash continuations are joined. Throws
    // error(parse_error) on malformed input.
    std::vector<token> tokenize(std::string_view source);

    bool is_keyword(std::string_view word);

}  // namespace tracescope::python
