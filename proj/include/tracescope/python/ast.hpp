#pragma once

#include <string>
#include <vector>

namespace tracescope::python {

    struct position {
        int line{0};
        int col{0};
        int end_line{0};
        int end_col{0};
    };

    enum class expr_kind {
        empty,  // absent optional slot (slice bounds, missing defaults)
        name,
        constant,  // text holds the literal source: numbers, strings, None/True/False/...
        attribute,     // items[0].text
        subscript,     // items[0][items[1]]
        slice,         // items = {lower, upper, step}, absent parts are `empty`
        call,          // items[0] = callee, rest are arguments in source order
        keyword,       // text=name, items[0]=value (call argument)
        starred,       // *items[0]
        double_starred,  // **items[0]
        binop,         // text=operator
        unaryop,       // text=operator ("not", "-", "+", "~")
        boolop,        // text="and"/"or", items = operands
        compare,       // items = operands, ops = operators
        ifexp,         // items = {body, test, orelse}
        lambda,        // items[0]=arguments, items[1]=body
        arguments,     // items = params
        param,         // text=name, op = "", "*", "**", "/" ; flags: has_annotation/has_default
        tuple,
        list,
        set,
        dict,          // items = dict_pair or double_starred
        dict_pair,     // items = {key, value}
        list_comp,     // items[0]=element, items[1..]=comp_for
        set_comp,
        generator,
        dict_comp,     // items[0]=key, items[1]=value, items[2..]=comp_for
        comp_for,      // items[0]=target, items[1]=iterable, items[2..]=conditions; flags bit async
        named,         // items[0] := items[1]
        await,
        yield,         // items[0] optional (empty)
        yield_from,
    };

    enum expr_flags : unsigned {
        flag_has_annotation = 1U,
        flag_has_default = 2U,
        flag_async = 4U,
        flag_parenthesized = 8U,
    };

    struct expr {
        expr_kind kind{expr_kind::empty};
        position pos{};
        std::string text{};
        std::vector<std::string> ops{};
        std::vector<expr> items{};
        unsigned flags{0};
        // Index into the list of tracked expressions, or -1.
        int track_id{-1};
        // Calls created by rewriting are never bracketed by hooks.
        bool synthetic{false};

        bool is(expr_kind k) const { return kind == k; }
    };

    enum class stmt_kind {
        expr,
        assign,      // targets = chain of targets, value
        aug_assign,  // targets[0] op= value ; op = "+=" ...
        ann_assign,  // targets[0] : exprs[0] [= value]
        return_,     // value may be empty
        pass,
        break_,
        continue_,
        del,         // targets
        global,      // names
        nonlocal,    // names
        import,      // names + aliases
        import_from, // op = module (with leading dots), names + aliases ("*" allowed)
        raise,       // exprs = {exc?, cause?}
        assert_,     // exprs = {test, msg?}
        if_,         // value=test, body, orelse; elif chains are a single if_ in orelse with is_elif
        while_,      // value=test, body, orelse
        for_,        // targets[0], value=iter, body, orelse; is_async
        function_def,  // name, exprs[0]=arguments, exprs[1]=returns (optional empty), decorators, body
        class_def,     // name, exprs = bases/keywords (call-argument style), decorators, body
        try_,        // body, handlers, orelse, finalbody
        except_handler,  // value=type (may be empty), name, body
        with,        // exprs = context managers, targets = optional vars (empty when absent), body
    };

    struct stmt {
        stmt_kind kind{stmt_kind::pass};
        position pos{};
        std::string name{};
        std::string op{};
        std::vector<expr> targets{};
        expr value{};
        std::vector<expr> exprs{};
        std::vector<expr> decorators{};
        std::vector<std::string> names{};
        std::vector<std::string> aliases{};
        std::vector<stmt> body{};
        std::vector<stmt> orelse{};
        std::vector<stmt> handlers{};
        std::vector<stmt> finalbody{};
        bool is_async{false};
        bool is_elif{false};
        // Set on `tmp = <expr>` statements produced for tracked expressions.
        int track_id{-1};
        // Hook statements produced by instrumentation.
        bool synthetic{false};
    };

    struct module {
        std::vector<stmt> body{};
    };

    // Small constructors used by the rewriters.
    expr make_name(std::string id, position pos = {});
    expr make_constant(std::string literal, position pos = {});
    expr make_string(std::string_view text, position pos = {});
    expr make_call(expr callee, std::vector<expr> args, position pos = {});
    expr make_attribute(expr base, std::string attr, position pos = {});
    stmt make_assign(expr target, expr value, position pos = {});
    stmt make_expr_stmt(expr value, position pos = {});

    // Python string literal for arbitrary text.
    std::string quote_string(std::string_view text);

}  // namespace tracescope::python
