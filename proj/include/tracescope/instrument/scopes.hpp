#pragma once

#include "tracescope/python/ast.hpp"
#include "tracescope/source_span.hpp"
#include "tracescope/static_info.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace tracescope::instrument {

    enum class scope_type { module, function, klass, lambda, comprehension };

    struct scope_node {
        std::string path{};
        scope_type type{scope_type::module};
        source_span span{};
        int parent{-1};
        std::vector<int> children{};
        std::set<std::string> bound{};
        std::set<std::string> params{};
        std::set<std::string> globals{};
        std::set<std::string> nonlocals{};
        std::map<std::string, symbol_kind> kinds{};
        // First binding position of each locally bound name.
        std::map<std::string, python::position> first_binding{};
        bool is_generator{false};
        bool is_async{false};
    };

    /// Lexical scopes of one module with Python's binding rules.
    class scope_table {
    public:
        static scope_table build(const python::module& m, const std::string& file = {});

        const std::vector<scope_node>& scopes() const { return scopes_; }
        const scope_node& at(int idx) const { return scopes_.at(static_cast<std::size_t>(idx)); }
        int module_index() const { return 0; }
        std::optional<int> find(const std::string& path) const;
        // Scope opened by a lambda or comprehension starting at `pos`.
        std::optional<int> find_anonymous(const python::position& pos) const;

        // Where a read of `name` in scope `idx` resolves (builtins map to "<builtin>").
        qualified_name resolve_load(int idx, const std::string& name) const;
        // Which binding an assignment to `name` in scope `idx` rebinds.
        qualified_name resolve_store(int idx, const std::string& name) const;

        // True when `name` is a plain local of a function scope that no nested
        // scope can rebind, so its value only changes by statements in this body.
        bool is_stable_local(int idx, const std::string& name) const;

        // Every scope where `name` is locally bound (definition sites).
        std::vector<int> binding_scopes(const std::string& name) const;

        // Trackable scopes are the module, functions and classes.
        static bool trackable(scope_type t) { return t != scope_type::lambda && t != scope_type::comprehension; }

    private:
        std::vector<scope_node> scopes_{};
        std::map<std::string, int> by_path_{};
        std::map<std::pair<int, int>, int> anonymous_{};

        friend class scope_builder;
    };

    bool is_builtin_name(const std::string& name);

    // Names bound by an assignment target (through tuples, lists and starred).
    void target_names(const python::expr& target, std::vector<std::string>& out);

    // Last source line covered by a statement, including nested blocks.
    int last_line(const python::stmt& s);

    // Dotted rendering of a callee ("np.linalg.norm"), or empty when the callee
    // is not a plain attribute chain.
    std::string dotted_name(const python::expr& callee);

}  // namespace tracescope::instrument
