#include "tracescope/error.hpp"
#include "tracescope/source_span.hpp"
#include "tracescope/trace_spec.hpp"

#include <algorithm>

namespace tracescope {

    using json = nlohmann::ordered_json;

    json span_to_json(const source_span& s) {
        return json{{"file", s.file},
                    {"start_line", s.start_line},
                    {"end_line", s.end_line},
                    {"start_col", s.start_col},
                    {"end_col", s.end_col}};
    }

    source_span span_from_json(const json& j) {
        source_span s;
        s.file = j.value("file", "");
        s.start_line = j.value("start_line", 0);
        s.end_line = j.value("end_line", s.start_line);
        s.start_col = j.value("start_col", 0);
        s.end_col = j.value("end_col", 0);
        return s;
    }

    const std::vector<std::string>& default_exclusions() {
        static const std::vector<std::string> defaults{"math", "numpy", "print", "len"};
        return defaults;
    }

    std::vector<std::string> effective_exclusions(const trace_spec& spec) {
        std::vector<std::string> out;
        if (!spec.override_default_exclusions) out = default_exclusions();
        for (const auto& e : spec.exclusions) {
            if (std::find(out.begin(), out.end(), e) == out.end()) out.push_back(e);
        }
        return out;
    }

    json target_to_json(const track_target& t) {
        json j{{"name", t.name},
               {"kind", t.kind == target_kind::variable ? "variable" : "expression"},
               {"scope", t.scope}};
        if (!t.span.empty()) j["span"] = span_to_json(t.span);
        return j;
    }

    track_target target_from_json(const json& j) {
        if (!j.is_object() || !j.contains("name") || !j["name"].is_string())
            throw error(error_code::invalid_spec, "track target needs a string 'name'");
        track_target t;
        t.name = j["name"].get<std::string>();
        auto kind = j.value("kind", "variable");
        if (kind == "variable")
            t.kind = target_kind::variable;
        else if (kind == "expression")
            t.kind = target_kind::expression;
        else
            throw error(error_code::invalid_spec, "unknown target kind '" + kind + "'");
        t.scope = j.value("scope", "");
        if (j.contains("span")) t.span = span_from_json(j["span"]);
        return t;
    }

    json spec_to_json(const trace_spec& spec) {
        json targets = json::array();
        for (const auto& t : spec.targets) targets.push_back(target_to_json(t));
        json customs = json::array();
        for (const auto& c : spec.customs) {
            customs.push_back(
                    json{{"label", c.label}, {"expression", c.expression_text}, {"anchor", target_to_json(c.anchor)}});
        }
        return json{{"subject_entry", spec.subject_entry},
                    {"targets", std::move(targets)},
                    {"customs", std::move(customs)},
                    {"exclusions", spec.exclusions},
                    {"override_default_exclusions", spec.override_default_exclusions}};
    }

    trace_spec spec_from_json(const json& j) {
        if (!j.is_object()) throw error(error_code::invalid_spec, "trace spec must be an object");
        trace_spec spec;
        spec.subject_entry = j.value("subject_entry", "");
        if (j.contains("targets")) {
            for (const auto& t : j["targets"]) spec.targets.push_back(target_from_json(t));
        }
        if (j.contains("customs")) {
            for (const auto& c : j["customs"]) {
                if (!c.contains("anchor")) throw error(error_code::invalid_spec, "custom expression needs an anchor");
                custom_expression ce;
                ce.label = c.value("label", "");
                ce.expression_text = c.value("expression", "");
                ce.anchor = target_from_json(c["anchor"]);
                if (ce.label.empty()) ce.label = ce.expression_text;
                spec.customs.push_back(std::move(ce));
            }
        }
        if (j.contains("exclusions")) spec.exclusions = j["exclusions"].get<std::vector<std::string>>();
        spec.override_default_exclusions = j.value("override_default_exclusions", false);
        return spec;
    }

}  // namespace tracescope
