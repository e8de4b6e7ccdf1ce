#include "tracescope/instrument/scopes.hpp"

#include <algorithm>
#include <string_view>

namespace tracescope::instrument {

    using python::expr;
    using python::expr_kind;
    using python::position;
    using python::stmt;
    using python::stmt_kind;

    namespace {

        constexpr std::string_view builtin_names[] = {
                "ArithmeticError", "AssertionError", "AttributeError", "BaseException", "BlockingIOError",
                "BrokenPipeError", "BufferError", "BytesWarning", "ChildProcessError", "ConnectionAbortedError",
                "ConnectionError", "ConnectionRefusedError", "ConnectionResetError", "DeprecationWarning",
                "EOFError", "Ellipsis", "EncodingWarning", "EnvironmentError", "Exception", "False",
                "FileExistsError", "FileNotFoundError", "FloatingPointError", "FutureWarning", "GeneratorExit",
                "IOError", "ImportError", "ImportWarning", "IndentationError", "IndexError", "InterruptedError",
                "IsADirectoryError", "KeyError", "KeyboardInterrupt", "LookupError", "MemoryError",
                "ModuleNotFoundError", "NameError", "None", "NotADirectoryError", "NotImplemented",
                "NotImplementedError", "OSError", "OverflowError", "PendingDeprecationWarning", "PermissionError",
                "ProcessLookupError", "RecursionError", "ReferenceError", "ResourceWarning", "RuntimeError",
                "RuntimeWarning", "StopAsyncIteration", "StopIteration", "SyntaxError", "SyntaxWarning",
                "SystemError", "SystemExit", "TabError", "TimeoutError", "True", "TypeError", "UnboundLocalError",
                "UnicodeDecodeError", "UnicodeEncodeError", "UnicodeError", "UnicodeTranslateError",
                "UnicodeWarning", "UserWarning", "ValueError", "Warning", "ZeroDivisionError", "__build_class__",
                "__debug__", "__doc__", "__import__", "__loader__", "__name__", "__package__", "__spec__", "abs",
                "aiter", "all", "anext", "any", "ascii", "bin", "bool", "breakpoint", "bytearray", "bytes",
                "callable", "chr", "classmethod", "compile", "complex", "copyright", "credits", "delattr", "dict",
                "dir", "divmod", "enumerate", "eval", "exec", "exit", "filter", "float", "format", "frozenset",
                "getattr", "globals", "hasattr", "hash", "help", "hex", "id", "input", "int", "isinstance",
                "issubclass", "iter", "len", "license", "list", "locals", "map", "max", "memoryview", "min",
                "next", "object", "oct", "open", "ord", "pow", "print", "property", "quit", "range", "repr",
                "reversed", "round", "set", "setattr", "slice", "sorted", "staticmethod", "str", "sum", "super",
                "tuple", "type", "vars", "zip", "__file__", "__builtins__", "__cached__"};

    }  // namespace

    bool is_builtin_name(const std::string& name) {
        return std::find(std::begin(builtin_names), std::end(builtin_names), name) != std::end(builtin_names);
    }

    void target_names(const expr& target, std::vector<std::string>& out) {
        switch (target.kind) {
            case expr_kind::name: out.push_back(target.text); break;
            case expr_kind::tuple:
            case expr_kind::list:
                for (const auto& item : target.items) target_names(item, out);
                break;
            case expr_kind::starred: target_names(target.items[0], out); break;
            default: break;
        }
    }

    int last_line(const stmt& s) {
        // Compound statements end where their last nested statement ends.
        int inner = 0;
        for (const auto* block : {&s.body, &s.orelse, &s.handlers, &s.finalbody})
            if (!block->empty()) inner = std::max(inner, last_line(block->back()));
        return inner > 0 ? inner : std::max(s.pos.line, s.pos.end_line);
    }

    std::string dotted_name(const expr& callee) {
        if (callee.is(expr_kind::name)) return callee.text;
        if (callee.is(expr_kind::attribute)) {
            auto base = dotted_name(callee.items[0]);
            return base.empty() ? std::string{} : base + "." + callee.text;
        }
        return {};
    }

    class scope_builder {
    public:
        scope_builder(scope_table& t, std::string file) : t_(t), file_(std::move(file)) {}

        void run(const python::module& m) {
            scope_node root;
            root.path = std::string(module_scope);
            root.type = scope_type::module;
            root.span = {file_, 1, 1, 0, 0};
            for (const auto& s : m.body) root.span.end_line = std::max(root.span.end_line, last_line(s));
            t_.scopes_.push_back(root);
            t_.by_path_[root.path] = 0;
            body(m.body, 0);
            for (auto& s : t_.scopes_) {
                for (const auto& g : s.globals) s.bound.erase(g);
                for (const auto& n : s.nonlocals) s.bound.erase(n);
            }
        }

    private:
        scope_table& t_;
        std::string file_;

        scope_node& node(int idx) { return t_.scopes_[static_cast<std::size_t>(idx)]; }

        int open_scope(int parent, std::string path, scope_type type, source_span span) {
            if (type != scope_type::lambda && type != scope_type::comprehension) {
                if (auto it = t_.by_path_.find(path); it != t_.by_path_.end()) return it->second;
            }
            scope_node n;
            n.path = std::move(path);
            n.type = type;
            n.span = std::move(span);
            n.parent = parent;
            int idx = static_cast<int>(t_.scopes_.size());
            t_.scopes_.push_back(std::move(n));
            node(parent).children.push_back(idx);
            if (type == scope_type::lambda || type == scope_type::comprehension) {
                const auto& sp = node(idx).span;
                t_.anonymous_[{sp.start_line, sp.start_col}] = idx;
            } else {
                t_.by_path_[node(idx).path] = idx;
            }
            return idx;
        }

        void bind(int s, const std::string& name, symbol_kind kind, const position& pos) {
            auto& n = node(s);
            n.bound.insert(name);
            n.first_binding.try_emplace(name, pos);
            auto it = n.kinds.find(name);
            if (it == n.kinds.end() || it->second == symbol_kind::variable) n.kinds[name] = kind;
        }

        void bind_target(const expr& target, int s) {
            switch (target.kind) {
                case expr_kind::name: bind(s, target.text, symbol_kind::variable, target.pos); break;
                case expr_kind::tuple:
                case expr_kind::list:
                    for (const auto& item : target.items) bind_target(item, s);
                    break;
                case expr_kind::starred: bind_target(target.items[0], s); break;
                default: visit(target, s); break;
            }
        }

        void body(const std::vector<stmt>& stmts, int s) {
            for (const auto& st : stmts) statement(st, s);
        }

        void params(const expr& arguments, int outer, int inner) {
            for (const auto& p : arguments.items) {
                for (const auto& sub : p.items) visit(sub, outer);
                if (!p.text.empty()) bind(inner, p.text, symbol_kind::parameter, p.pos);
                node(inner).params.insert(p.text);
            }
            node(inner).params.erase("");
        }

        void statement(const stmt& st, int s) {
            switch (st.kind) {
                case stmt_kind::function_def: {
                    for (const auto& d : st.decorators) visit(d, s);
                    bind(s, st.name, symbol_kind::function, st.pos);
                    source_span span{file_, st.pos.line, last_line(st), st.pos.col, 0};
                    int f = open_scope(s, scope_child(node(s).path, st.name), scope_type::function, span);
                    node(f).is_async = node(f).is_async || st.is_async;
                    params(st.exprs[0], s, f);
                    if (st.exprs.size() > 1) visit(st.exprs[1], s);
                    body(st.body, f);
                    break;
                }
                case stmt_kind::class_def: {
                    for (const auto& d : st.decorators) visit(d, s);
                    for (const auto& b : st.exprs) visit(b, s);
                    bind(s, st.name, symbol_kind::klass, st.pos);
                    source_span span{file_, st.pos.line, last_line(st), st.pos.col, 0};
                    int c = open_scope(s, scope_child(node(s).path, st.name), scope_type::klass, span);
                    body(st.body, c);
                    break;
                }
                case stmt_kind::assign:
                    visit(st.value, s);
                    for (const auto& target : st.targets) bind_target(target, s);
                    break;
                case stmt_kind::aug_assign:
                    visit(st.value, s);
                    bind_target(st.targets[0], s);
                    break;
                case stmt_kind::ann_assign:
                    for (const auto& e : st.exprs) visit(e, s);
                    visit(st.value, s);
                    if (st.targets[0].is(expr_kind::name)) bind_target(st.targets[0], s);
                    else visit(st.targets[0], s);
                    break;
                case stmt_kind::for_:
                    visit(st.value, s);
                    bind_target(st.targets[0], s);
                    body(st.body, s);
                    body(st.orelse, s);
                    break;
                case stmt_kind::while_:
                case stmt_kind::if_:
                    visit(st.value, s);
                    body(st.body, s);
                    body(st.orelse, s);
                    break;
                case stmt_kind::with:
                    for (std::size_t i = 0; i < st.exprs.size(); ++i) {
                        visit(st.exprs[i], s);
                        if (i < st.targets.size() && !st.targets[i].is(expr_kind::empty)) bind_target(st.targets[i], s);
                    }
                    body(st.body, s);
                    break;
                case stmt_kind::try_:
                    body(st.body, s);
                    for (const auto& h : st.handlers) {
                        visit(h.value, s);
                        if (!h.name.empty()) bind(s, h.name, symbol_kind::variable, h.pos);
                        body(h.body, s);
                    }
                    body(st.orelse, s);
                    body(st.finalbody, s);
                    break;
                case stmt_kind::import:
                    for (std::size_t i = 0; i < st.names.size(); ++i) {
                        const auto& alias = i < st.aliases.size() ? st.aliases[i] : std::string{};
                        auto bound = alias.empty() ? st.names[i].substr(0, st.names[i].find('.')) : alias;
                        bind(s, bound, symbol_kind::import, st.pos);
                    }
                    break;
                case stmt_kind::import_from:
                    for (std::size_t i = 0; i < st.names.size(); ++i) {
                        if (st.names[i] == "*") continue;
                        const auto& alias = i < st.aliases.size() ? st.aliases[i] : std::string{};
                        bind(s, alias.empty() ? st.names[i] : alias, symbol_kind::import, st.pos);
                    }
                    break;
                case stmt_kind::global:
                    for (const auto& n : st.names) node(s).globals.insert(n);
                    break;
                case stmt_kind::nonlocal:
                    for (const auto& n : st.names) node(s).nonlocals.insert(n);
                    break;
                case stmt_kind::del:
                    for (const auto& target : st.targets) bind_target(target, s);
                    break;
                default:
                    visit(st.value, s);
                    for (const auto& e : st.exprs) visit(e, s);
                    for (const auto& e : st.targets) visit(e, s);
                    break;
            }
        }

        int enclosing_binder(int s) {
            while (node(s).type == scope_type::comprehension) s = node(s).parent;
            return s;
        }

        void comprehension(const expr& e, int s, std::size_t first_for) {
            source_span span{file_, e.pos.line, std::max(e.pos.line, e.pos.end_line), e.pos.col, e.pos.end_col};
            int c = open_scope(s, node(s).path + ".<comp@" + std::to_string(e.pos.line) + ":" +
                                          std::to_string(e.pos.col) + ">",
                               scope_type::comprehension, span);
            for (std::size_t i = first_for; i < e.items.size(); ++i) {
                const auto& f = e.items[i];
                visit(f.items[1], i == first_for ? s : c);
                bind_target(f.items[0], c);
                for (std::size_t k = 2; k < f.items.size(); ++k) visit(f.items[k], c);
            }
            for (std::size_t i = 0; i < first_for; ++i) visit(e.items[i], c);
        }

        void visit(const expr& e, int s) {
            switch (e.kind) {
                case expr_kind::lambda: {
                    source_span span{file_, e.pos.line, std::max(e.pos.line, e.pos.end_line), e.pos.col,
                                     e.pos.end_col};
                    int l = open_scope(s, node(s).path + ".<lambda@" + std::to_string(e.pos.line) + ":" +
                                                  std::to_string(e.pos.col) + ">",
                                       scope_type::lambda, span);
                    params(e.items[0], s, l);
                    visit(e.items[1], l);
                    return;
                }
                case expr_kind::list_comp:
                case expr_kind::set_comp:
                case expr_kind::generator: comprehension(e, s, 1); return;
                case expr_kind::dict_comp: comprehension(e, s, 2); return;
                case expr_kind::named:
                    visit(e.items[1], s);
                    bind(enclosing_binder(s), e.items[0].text, symbol_kind::variable, e.items[0].pos);
                    return;
                case expr_kind::yield:
                case expr_kind::yield_from: node(s).is_generator = true; break;
                case expr_kind::await: node(s).is_async = true; break;
                default: break;
            }
            for (const auto& item : e.items) visit(item, s);
        }
    };

    scope_table scope_table::build(const python::module& m, const std::string& file) {
        scope_table t;
        scope_builder(t, file).run(m);
        return t;
    }

    std::optional<int> scope_table::find(const std::string& path) const {
        auto it = by_path_.find(path);
        if (it == by_path_.end()) return std::nullopt;
        return it->second;
    }

    std::optional<int> scope_table::find_anonymous(const position& pos) const {
        auto it = anonymous_.find({pos.line, pos.col});
        if (it == anonymous_.end()) return std::nullopt;
        return it->second;
    }

    namespace {
        qualified_name module_or_builtin(const scope_table& t, const std::string& name) {
            if (t.at(0).bound.contains(name)) return {name, std::string(module_scope)};
            if (is_builtin_name(name)) return {name, std::string(builtin_scope)};
            return {name, std::string(module_scope)};
        }

        // Nearest enclosing function-like scope binding `name`.
        std::optional<qualified_name> enclosing_binding(const scope_table& t, int idx, const std::string& name) {
            for (int p = t.at(idx).parent; p > 0; p = t.at(p).parent) {
                const auto& n = t.at(p);
                if (n.type == scope_type::klass) continue;
                if (n.globals.contains(name)) return std::nullopt;
                if (n.bound.contains(name)) return qualified_name{name, n.path};
            }
            return std::nullopt;
        }
    }  // namespace

    qualified_name scope_table::resolve_load(int idx, const std::string& name) const {
        const auto& s = at(idx);
        if (s.globals.contains(name)) return module_or_builtin(*this, name);
        if (s.nonlocals.contains(name)) {
            if (auto q = enclosing_binding(*this, idx, name)) return *q;
            return module_or_builtin(*this, name);
        }
        if (s.bound.contains(name)) return {name, s.path};
        if (auto q = enclosing_binding(*this, idx, name)) return *q;
        return module_or_builtin(*this, name);
    }

    qualified_name scope_table::resolve_store(int idx, const std::string& name) const {
        const auto& s = at(idx);
        if (s.globals.contains(name)) return {name, std::string(module_scope)};
        if (s.nonlocals.contains(name)) {
            if (auto q = enclosing_binding(*this, idx, name)) return *q;
            return {name, std::string(module_scope)};
        }
        return {name, s.path};
    }

    bool scope_table::is_stable_local(int idx, const std::string& name) const {
        const auto& s = at(idx);
        if (s.type != scope_type::function || !s.bound.contains(name)) return false;
        std::vector<int> stack(s.children.begin(), s.children.end());
        while (!stack.empty()) {
            const auto& c = at(stack.back());
            stack.pop_back();
            if (c.nonlocals.contains(name)) return false;
            stack.insert(stack.end(), c.children.begin(), c.children.end());
        }
        return true;
    }

    std::vector<int> scope_table::binding_scopes(const std::string& name) const {
        std::vector<int> out;
        for (std::size_t i = 0; i < scopes_.size(); ++i)
            if (trackable(scopes_[i].type) && scopes_[i].bound.contains(name)) out.push_back(static_cast<int>(i));
        return out;
    }

}  // namespace tracescope::instrument
