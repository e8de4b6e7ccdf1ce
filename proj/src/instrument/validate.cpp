#include "tracescope/instrument/validate.hpp"

#include "tracescope/instrument/sites.hpp"
#include "tracescope/python/lexer.hpp"
#include "tracescope/python/parser.hpp"
#include "tracescope/python/unparse.hpp"
#include "tracescope/python/visit.hpp"

#include <cctype>
#include <set>

namespace tracescope::instrument {

    using python::expr;
    using python::expr_kind;

    const trace_spec& validation_result::value() const {
        if (issues.empty()) return spec;
        std::string joined;
        for (const auto& issue : issues) {
            if (!joined.empty()) joined += "; ";
            joined += issue.message;
        }
        throw error(issues.front().code, joined);
    }

    bool is_identifier(std::string_view text) {
        if (text.empty()) return false;
        auto head = static_cast<unsigned char>(text.front());
        if (!(std::isalpha(head) || head == '_' || head >= 0x80)) return false;
        for (unsigned char c : text)
            if (!(std::isalnum(c) || c == '_' || c >= 0x80)) return false;
        return !python::is_keyword(std::string(text));
    }

    int scope_index_at_line(const scope_table& scopes, int line) {
        int best = scopes.module_index();
        int best_size = -1;
        for (std::size_t i = 0; i < scopes.scopes().size(); ++i) {
            const auto& s = scopes.scopes()[i];
            if (s.type != scope_type::function && s.type != scope_type::klass) continue;
            if (!s.span.contains_line(line)) continue;
            int size = s.span.end_line - s.span.start_line;
            if (best_size < 0 || size <= best_size) {
                best = static_cast<int>(i);
                best_size = size;
            }
        }
        return best;
    }

    namespace {

        class validator {
        public:
            validator(const python::module& m, const scope_table& scopes, std::string file)
                : m_(m), scopes_(scopes), file_(std::move(file)) {}

            validation_result run(const trace_spec& spec) {
                validation_result r;
                r.spec = spec;
                r.spec.targets.clear();
                r.spec.customs.clear();
                std::set<std::pair<std::string, std::string>> seen;
                for (const auto& t : spec.targets) {
                    auto resolved = resolve(t, r.issues);
                    if (!resolved) continue;
                    if (!seen.insert({resolved->name, resolved->scope}).second) {
                        r.issues.push_back({error_code::duplicate_target,
                                            "target '" + resolved->name + "@" + resolved->scope +
                                                    "' is listed more than once",
                                            resolved->span});
                        continue;
                    }
                    r.spec.targets.push_back(*resolved);
                }
                std::set<std::string> labels;
                for (const auto& c : spec.customs) {
                    auto resolved = resolve_custom(c, r.spec, r.issues);
                    if (!resolved) continue;
                    if (!labels.insert(resolved->label).second) {
                        r.issues.push_back({error_code::duplicate_target,
                                            "custom expression label '" + resolved->label + "' is used twice",
                                            resolved->anchor.span});
                        continue;
                    }
                    r.spec.customs.push_back(*resolved);
                }
                return r;
            }

        private:
            const python::module& m_;
            const scope_table& scopes_;
            std::string file_;

            source_span binding_span(int s, const std::string& name) const {
                const auto& node = scopes_.at(s);
                auto it = node.first_binding.find(name);
                if (it == node.first_binding.end()) return node.span;
                const auto& p = it->second;
                return {file_, p.line, p.line, p.col, p.col + static_cast<int>(name.size())};
            }

            std::optional<track_target> resolve(const track_target& t, std::vector<spec_issue>& issues) const {
                auto fail = [&](error_code code, std::string msg) -> std::optional<track_target> {
                    issues.push_back({code, std::move(msg), t.span});
                    return std::nullopt;
                };
                if (t.kind == target_kind::variable) {
                    if (!is_identifier(t.name)) return fail(error_code::unresolvable_target,
                                                            "'" + t.name + "' is not a variable name");
                    int s = -1;
                    if (!t.scope.empty()) {
                        auto found = scopes_.find(t.scope);
                        if (!found) return fail(error_code::unresolvable_target, "no scope named '" + t.scope + "'");
                        s = *found;
                        if (!scopes_.at(s).bound.contains(t.name))
                            return fail(error_code::unresolvable_target,
                                        "'" + t.name + "' is not assigned in scope '" + t.scope + "'");
                    } else if (t.span.start_line > 0) {
                        auto q = scopes_.resolve_load(scope_index_at_line(scopes_, t.span.start_line), t.name);
                        auto found = scopes_.find(q.scope);
                        if (!found || !scopes_.at(*found).bound.contains(t.name))
                            return fail(error_code::unresolvable_target,
                                        "'" + t.name + "' is not defined at line " + std::to_string(t.span.start_line));
                        s = *found;
                    } else {
                        auto sites = scopes_.binding_scopes(t.name);
                        if (sites.empty())
                            return fail(error_code::unresolvable_target, "'" + t.name + "' is never assigned");
                        if (sites.size() > 1) {
                            std::string where;
                            for (int i : sites) where += (where.empty() ? "" : ", ") + scopes_.at(i).path;
                            return fail(error_code::unresolvable_target,
                                        "'" + t.name + "' is defined in several scopes (" + where + ")");
                        }
                        s = sites.front();
                    }
                    if (!scope_table::trackable(scopes_.at(s).type))
                        return fail(error_code::unresolvable_target, "'" + t.name + "' is local to an expression");
                    track_target out = t;
                    out.scope = scopes_.at(s).path;
                    if (out.span.empty()) out.span = binding_span(s, t.name);
                    if (out.span.file.empty()) out.span.file = file_;
                    return out;
                }

                std::string canonical;
                try {
                    canonical = canonical_expression(t.name);
                } catch (const error& e) {
                    return fail(error_code::unresolvable_target, "expression '" + t.name + "' does not parse: " + e.what());
                }
                if (t.span.start_line <= 0)
                    return fail(error_code::unresolvable_target, "expression '" + t.name + "' needs a line");
                std::optional<int> col;
                if (t.span.end_col > t.span.start_col) col = t.span.start_col;
                auto sites = find_expression_sites(m_, scopes_, canonical, t.span.start_line, col);
                if (sites.empty())
                    return fail(error_code::unresolvable_target, "expression '" + canonical + "' does not occur on line " +
                                                                         std::to_string(t.span.start_line));
                for (const auto& site : sites) {
                    if (!site.hoistable)
                        return fail(error_code::unsupported_construct,
                                    "expression '" + canonical + "' on line " + std::to_string(site.pos.line) +
                                            " sits where it cannot be evaluated separately");
                }
                track_target out = t;
                out.name = canonical;
                out.scope = scopes_.at(sites.front().scope).path;
                if (!t.scope.empty() && t.scope != out.scope)
                    return fail(error_code::unresolvable_target,
                                "expression '" + canonical + "' is in scope '" + out.scope + "', not '" + t.scope + "'");
                const auto& p = sites.front().pos;
                out.span = {file_, p.line, std::max(p.line, p.end_line), p.col, p.end_col};
                return out;
            }

            std::optional<custom_expression> resolve_custom(const custom_expression& c, const trace_spec& resolved,
                                                            std::vector<spec_issue>& issues) const {
                auto fail = [&](error_code code, std::string msg) -> std::optional<custom_expression> {
                    issues.push_back({code, std::move(msg), c.anchor.span});
                    return std::nullopt;
                };
                if (c.label.empty()) return fail(error_code::invalid_spec, "custom expression needs a label");
                std::vector<spec_issue> anchor_issues;
                auto anchor = resolve(c.anchor, anchor_issues);
                if (!anchor) {
                    issues.insert(issues.end(), anchor_issues.begin(), anchor_issues.end());
                    return std::nullopt;
                }
                bool tracked = false;
                for (const auto& t : resolved.targets)
                    if (t.name == anchor->name && t.scope == anchor->scope && t.kind == anchor->kind) tracked = true;
                if (!tracked)
                    return fail(error_code::unresolvable_target,
                                "custom '" + c.label + "' is anchored to '" + anchor->name + "', which is not tracked");
                expr parsed;
                try {
                    parsed = python::parse_expression(c.expression_text);
                } catch (const error& e) {
                    return fail(error_code::unresolvable_target,
                                "custom '" + c.label + "' does not parse: " + e.what());
                }
                int s = *scopes_.find(anchor->scope);
                std::set<std::string> local;
                python::walk_exprs(parsed, [&](const expr& e) {
                    if (e.is(expr_kind::comp_for)) {
                        std::vector<std::string> names;
                        target_names(e.items[0], names);
                        local.insert(names.begin(), names.end());
                    }
                    if (e.is(expr_kind::param)) local.insert(e.text);
                });
                std::string missing;
                python::walk_exprs(parsed, [&](const expr& e) {
                    if (!e.is(expr_kind::name) || local.contains(e.text)) return;
                    auto q = scopes_.resolve_load(s, e.text);
                    if (q.scope == builtin_scope) return;
                    auto found = scopes_.find(q.scope);
                    if (found && scopes_.at(*found).bound.contains(e.text)) return;
                    if (missing.empty()) missing = e.text;
                });
                if (!missing.empty())
                    return fail(error_code::unresolvable_target, "custom '" + c.label + "' uses '" + missing +
                                                                         "', which is not visible in scope '" +
                                                                         anchor->scope + "'");
                custom_expression out = c;
                out.anchor = *anchor;
                out.expression_text = python::unparse(parsed);
                return out;
            }
        };

    }  // namespace

    validation_result validate_spec(const trace_spec& spec, const python::module& m, const scope_table& scopes,
                                    const std::string& file) {
        return validator(m, scopes, file).run(spec);
    }

    validation_result validate_spec(const trace_spec& spec, std::string_view source, const std::string& file) {
        auto m = python::parse_module(source);
        auto scopes = scope_table::build(m, file);
        return validate_spec(spec, m, scopes, file);
    }

}  // namespace tracescope::instrument
