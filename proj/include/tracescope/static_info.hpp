#pragma once

#include "tracescope/source_span.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace tracescope {

    // A name bound in a particular scope, rendered as "name@scope".
    struct qualified_name {
        std::string name{};
        std::string scope{};

        std::string str() const { return name + "@" + scope; }
        static qualified_name parse(std::string_view text);

        friend auto operator<=>(const qualified_name&, const qualified_name&) = default;
    };

    inline constexpr std::string_view builtin_scope = "<builtin>";

    enum class symbol_kind { variable, function, klass, parameter, import, builtin };

    const char* kind_name(symbol_kind k);

    struct static_info {
        // Keyed by qualified scope path ("f", "C.method", "outer.inner").
        std::map<std::string, source_span> function_spans{};
        std::map<std::string, source_span> class_spans{};
        // Keyed by "line:col" of the loop keyword (or comprehension).
        std::map<std::string, source_span> loop_spans{};
        std::map<qualified_name, std::set<qualified_name>> direct_deps{};
        // Every name the analysis saw, with what it denotes.
        std::map<qualified_name, symbol_kind> symbols{};

        // Innermost function or class scope whose span contains `line`.
        std::string scope_at_line(int line) const;
        bool is_function(const qualified_name& q) const;

        friend bool operator==(const static_info&, const static_info&) = default;
    };

    std::string scope_child(const std::string& parent, const std::string& name);

    nlohmann::ordered_json static_info_to_json(const static_info& s);
    static_info static_info_from_json(const nlohmann::ordered_json& j);

}  // namespace tracescope
