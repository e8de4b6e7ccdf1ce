#include "tracescope/static_info.hpp"

#include "tracescope/error.hpp"

namespace tracescope {

    using json = nlohmann::ordered_json;

    qualified_name qualified_name::parse(std::string_view text) {
        auto at = text.rfind('@');
        if (at == std::string_view::npos || at == 0)
            return {std::string(text), std::string()};
        return {std::string(text.substr(0, at)), std::string(text.substr(at + 1))};
    }

    std::string scope_child(const std::string& parent, const std::string& name) {
        if (parent.empty() || parent == module_scope) return name;
        return parent + "." + name;
    }

    std::string static_info::scope_at_line(int line) const {
        std::string best(module_scope);
        int best_width = -1;
        auto consider = [&](const std::map<std::string, source_span>& spans) {
            for (const auto& [scope, span] : spans) {
                if (!span.contains_line(line)) continue;
                int width = span.end_line - span.start_line;
                if (best_width < 0 || width < best_width || (width == best_width && scope.size() > best.size())) {
                    best = scope;
                    best_width = width;
                }
            }
        };
        consider(function_spans);
        consider(class_spans);
        return best;
    }

    bool static_info::is_function(const qualified_name& q) const {
        auto it = symbols.find(q);
        return it != symbols.end() && it->second == symbol_kind::function;
    }

    const char* kind_name(symbol_kind k) {
        switch (k) {
            case symbol_kind::variable: return "variable";
            case symbol_kind::function: return "function";
            case symbol_kind::klass: return "class";
            case symbol_kind::parameter: return "parameter";
            case symbol_kind::import: return "import";
            case symbol_kind::builtin: return "builtin";
        }
        return "variable";
    }

    namespace {
        symbol_kind kind_from_name(const std::string& s) {
            for (auto k : {symbol_kind::variable, symbol_kind::function, symbol_kind::klass, symbol_kind::parameter,
                           symbol_kind::import, symbol_kind::builtin}) {
                if (s == kind_name(k)) return k;
            }
            throw error(error_code::malformed_trace, "unknown symbol kind '" + s + "'");
        }

        json spans_to_json(const std::map<std::string, source_span>& spans) {
            json out = json::object();
            for (const auto& [k, v] : spans) out[k] = span_to_json(v);
            return out;
        }

        std::map<std::string, source_span> spans_from_json(const json& j) {
            std::map<std::string, source_span> out;
            for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = span_from_json(it.value());
            return out;
        }
    }  // namespace

    json static_info_to_json(const static_info& s) {
        json deps = json::object();
        for (const auto& [k, v] : s.direct_deps) {
            json arr = json::array();
            for (const auto& d : v) arr.push_back(d.str());
            deps[k.str()] = std::move(arr);
        }
        json symbols = json::object();
        for (const auto& [k, v] : s.symbols) symbols[k.str()] = kind_name(v);
        return json{{"function_spans", spans_to_json(s.function_spans)},
                    {"class_spans", spans_to_json(s.class_spans)},
                    {"loop_spans", spans_to_json(s.loop_spans)},
                    {"direct_deps", std::move(deps)},
                    {"symbols", std::move(symbols)}};
    }

    static_info static_info_from_json(const json& j) {
        static_info s;
        if (!j.is_object()) return s;
        if (j.contains("function_spans")) s.function_spans = spans_from_json(j["function_spans"]);
        if (j.contains("class_spans")) s.class_spans = spans_from_json(j["class_spans"]);
        if (j.contains("loop_spans")) s.loop_spans = spans_from_json(j["loop_spans"]);
        if (j.contains("direct_deps")) {
            for (auto it = j["direct_deps"].begin(); it != j["direct_deps"].end(); ++it) {
                auto& set = s.direct_deps[qualified_name::parse(it.key())];
                for (const auto& d : it.value()) set.insert(qualified_name::parse(d.get<std::string>()));
            }
        }
        if (j.contains("symbols")) {
            for (auto it = j["symbols"].begin(); it != j["symbols"].end(); ++it)
                s.symbols[qualified_name::parse(it.key())] = kind_from_name(it.value().get<std::string>());
        }
        return s;
    }

}  // namespace tracescope
