#include "tracescope/store/plot.hpp"

#include "tracescope/error.hpp"

#include <algorithm>
#include <cmath>

namespace tracescope::store {

    data_type classify(const std::vector<value_row>& rows) {
        for (const auto& r : rows)
            if (!r.val.is_numeric()) return data_type::nominal;
        return data_type::quantitative;
    }

    std::vector<plot_kind> admissible_plots(const data_signature& sig) {
        using enum data_type;
        const auto& t = sig.types;
        bool all_q = !t.empty() && std::all_of(t.begin(), t.end(), [](data_type d) { return d == quantitative; });
        if (sig.grouped) {
            if (t.size() == 1 && t[0] == nominal) return {plot_kind::small_multiples};
            if (t.size() == 1 && t[0] == quantitative) return {plot_kind::small_multiples, plot_kind::box};
            if (t.size() == 2 && all_q) return {plot_kind::small_multiples};
            return {};
        }
        if (t.size() == 1) return {t[0] == quantitative ? plot_kind::histogram : plot_kind::bar};
        if (t.size() == 2 && all_q) return {plot_kind::scatter};
        if (t.size() >= 3 && all_q) return {plot_kind::parallel_coordinates};
        return {};
    }

    namespace {

        axis_info describe_axis(const std::string& name, const std::vector<value_row>& rows) {
            axis_info a;
            a.name = name;
            a.type = classify(rows);
            a.count = rows.size();
            for (const auto& r : rows) {
                if (!r.val.is_numeric()) {
                    ++a.non_numeric;
                    continue;
                }
                double d = r.val.as_double();
                if (std::isnan(d)) {
                    ++a.nan_count;
                    continue;
                }
                if (std::isinf(d)) {
                    ++a.inf_count;
                    continue;
                }
                a.min = a.min ? std::min(*a.min, d) : d;
                a.max = a.max ? std::max(*a.max, d) : d;
            }
            return a;
        }

        value_filter filter_for(const plot_query& q, const std::string& name) {
            auto it = q.filters.find(name);
            return it == q.filters.end() ? value_filter{} : it->second;
        }

    }  // namespace

    plot_payload run_plot(const trace_store& store, const plot_query& q) {
        if (q.names.empty()) throw error(error_code::invalid_argument, "a plot needs at least one name");
        plot_payload p;
        p.signature.grouped = q.group_by.has_value();

        std::vector<std::vector<value_row>> per_name;
        if (q.names.size() == 1) {
            per_name.push_back(store.select_values(q.names[0], filter_for(q, q.names[0])));
        } else {
            p.tuples = store.join_values(q.names, q.join, q.filters);
            per_name.resize(q.names.size());
            for (const auto& tuple : p.tuples->tuples)
                for (std::size_t k = 0; k < tuple.size(); ++k) per_name[k].push_back(tuple[k]);
        }
        for (std::size_t k = 0; k < q.names.size(); ++k) {
            p.axes.push_back(describe_axis(store.resolve_name(q.names[k]), per_name[k]));
            p.signature.types.push_back(p.axes.back().type);
        }

        auto allowed = admissible_plots(p.signature);
        if (allowed.empty())
            throw error(error_code::not_admissible, "no plot supports this combination of data types");
        if (q.kind && std::find(allowed.begin(), allowed.end(), *q.kind) == allowed.end())
            throw error(error_code::not_admissible, std::string(to_string(*q.kind)) + " is not admissible here");
        p.kind = q.kind.value_or(allowed.front());

        if (q.names.size() == 1) p.rows = per_name[0];
        if (q.group_by) {
            auto groups = store.group_values(q.names[0], *q.group_by, filter_for(q, q.names[0]), q.group_cap);
            if (p.tuples) {
                // Keep only first-axis rows that made it into a tuple.
                std::set<std::int64_t> joined_ids;
                for (const auto& r : per_name[0]) joined_ids.insert(r.id);
                for (auto& g : groups)
                    std::erase_if(g.rows, [&](const value_row& r) { return !joined_ids.contains(r.id); });
                std::erase_if(groups, [](const value_group& g) { return g.rows.empty(); });
            }
            p.groups = std::move(groups);
        }
        return p;
    }

    std::string_view to_string(data_type t) { return t == data_type::quantitative ? "Q" : "N"; }

    std::string_view to_string(plot_kind k) {
        switch (k) {
            case plot_kind::histogram: return "histogram";
            case plot_kind::bar: return "bar";
            case plot_kind::scatter: return "scatter";
            case plot_kind::parallel_coordinates: return "parallel_coordinates";
            case plot_kind::small_multiples: return "small_multiples";
            case plot_kind::box: return "box";
        }
        return "histogram";
    }

    std::optional<plot_kind> plot_kind_from_string(std::string_view s) {
        for (auto k : {plot_kind::histogram, plot_kind::bar, plot_kind::scatter, plot_kind::parallel_coordinates,
                       plot_kind::small_multiples, plot_kind::box})
            if (to_string(k) == s) return k;
        return std::nullopt;
    }

    nlohmann::ordered_json row_to_json(const value_row& r) {
        nlohmann::ordered_json j;
        j["id"] = r.id;
        j["name"] = r.name;
        j["line"] = r.line;
        j["ts"] = r.ts;
        j["value"] = value_to_json(r.val);
        j["parent_id"] = r.parent;
        j["block_id"] = r.block;
        j["iteration"] = r.iteration ? nlohmann::ordered_json(*r.iteration) : nlohmann::ordered_json();
        j["is_variable"] = r.is_variable;
        j["is_custom"] = r.is_custom;
        return j;
    }

    nlohmann::ordered_json filter_to_json(const value_filter& f) {
        nlohmann::ordered_json j = nlohmann::ordered_json::object();
        if (f.min) j["min"] = *f.min;
        if (f.max) j["max"] = *f.max;
        if (f.max_exclusive) j["max_exclusive"] = true;
        if (f.ids) j["ids"] = *f.ids;
        if (f.subtree) j["subtree"] = *f.subtree;
        if (f.ts_from) j["ts_from"] = *f.ts_from;
        if (f.ts_to) j["ts_to"] = *f.ts_to;
        return j;
    }

    value_filter filter_from_json(const nlohmann::ordered_json& j) {
        if (!j.is_object()) throw error(error_code::invalid_argument, "filter must be an object");
        value_filter f;
        try {
            if (j.contains("min")) f.min = j.at("min").get<double>();
            if (j.contains("max")) f.max = j.at("max").get<double>();
            f.max_exclusive = j.value("max_exclusive", false);
            if (j.contains("ids")) f.ids = j.at("ids").get<std::set<std::int64_t>>();
            if (j.contains("subtree")) f.subtree = j.at("subtree").get<block_id>();
            if (j.contains("ts_from")) f.ts_from = j.at("ts_from").get<timestamp>();
            if (j.contains("ts_to")) f.ts_to = j.at("ts_to").get<timestamp>();
        } catch (const nlohmann::json::exception& e) {
            throw error(error_code::invalid_argument, std::string("bad filter: ") + e.what());
        }
        return f;
    }

    nlohmann::ordered_json plot_query_to_json(const plot_query& q) {
        nlohmann::ordered_json j;
        j["names"] = q.names;
        j["filters"] = nlohmann::ordered_json::object();
        for (const auto& [n, f] : q.filters) j["filters"][n] = filter_to_json(f);
        if (q.group_by) j["group_by"] = {{"kind", to_string(q.group_by->kind)}, {"key", q.group_by->key}};
        if (q.join) j["join"] = {{"kind", to_string(q.join->kind)}, {"key", q.join->key}};
        if (q.kind) j["kind"] = to_string(*q.kind);
        j["group_cap"] = q.group_cap;
        return j;
    }

    plot_query plot_query_from_json(const nlohmann::ordered_json& j) {
        if (!j.is_object()) throw error(error_code::invalid_argument, "plot query must be an object");
        plot_query q;
        try {
            q.names = j.at("names").get<std::vector<std::string>>();
            if (j.contains("filters"))
                for (const auto& [n, f] : j.at("filters").items()) q.filters[n] = filter_from_json(f);
            if (j.contains("group_by")) {
                const auto& g = j.at("group_by");
                auto kind = splitter_kind_from_string(g.at("kind").get<std::string>());
                if (!kind) throw error(error_code::invalid_argument, "unknown group_by kind");
                q.group_by = splitter{*kind, g.value("key", std::string())};
            }
            if (j.contains("join")) {
                const auto& g = j.at("join");
                auto kind = ancestor_kind_from_string(g.at("kind").get<std::string>());
                if (!kind) throw error(error_code::invalid_argument, "unknown join kind");
                q.join = join_scope{*kind, g.value("key", std::string())};
            }
            if (j.contains("kind")) {
                auto kind = plot_kind_from_string(j.at("kind").get<std::string>());
                if (!kind) throw error(error_code::invalid_argument, "unknown plot kind");
                q.kind = *kind;
            }
            q.group_cap = j.value("group_cap", default_group_cap);
        } catch (const nlohmann::json::exception& e) {
            throw error(error_code::invalid_argument, std::string("bad plot query: ") + e.what());
        }
        return q;
    }

    nlohmann::ordered_json plot_to_json(const plot_payload& p) {
        nlohmann::ordered_json j;
        j["kind"] = to_string(p.kind);
        j["signature"]["types"] = nlohmann::ordered_json::array();
        for (auto t : p.signature.types) j["signature"]["types"].push_back(to_string(t));
        j["signature"]["grouped"] = p.signature.grouped;
        j["admissible"] = nlohmann::ordered_json::array();
        for (auto k : admissible_plots(p.signature)) j["admissible"].push_back(to_string(k));
        j["axes"] = nlohmann::ordered_json::array();
        for (const auto& a : p.axes) {
            nlohmann::ordered_json ax;
            ax["name"] = a.name;
            ax["type"] = to_string(a.type);
            ax["min"] = a.min ? nlohmann::ordered_json(*a.min) : nlohmann::ordered_json();
            ax["max"] = a.max ? nlohmann::ordered_json(*a.max) : nlohmann::ordered_json();
            ax["count"] = a.count;
            ax["nan_count"] = a.nan_count;
            ax["inf_count"] = a.inf_count;
            ax["non_numeric"] = a.non_numeric;
            j["axes"].push_back(std::move(ax));
        }
        j["rows"] = nlohmann::ordered_json::array();
        for (const auto& r : p.rows) j["rows"].push_back(row_to_json(r));
        if (p.tuples) {
            nlohmann::ordered_json t;
            t["scope"] = {{"kind", to_string(p.tuples->scope.kind)}, {"key", p.tuples->scope.key}};
            t["names"] = p.tuples->names;
            t["instances"] = p.tuples->instances;
            t["rows"] = nlohmann::ordered_json::array();
            for (const auto& tuple : p.tuples->tuples) {
                nlohmann::ordered_json row = nlohmann::ordered_json::array();
                for (const auto& r : tuple) row.push_back(row_to_json(r));
                t["rows"].push_back(std::move(row));
            }
            j["tuples"] = std::move(t);
        }
        j["groups"] = nlohmann::ordered_json::array();
        for (const auto& g : p.groups) {
            nlohmann::ordered_json gj;
            gj["key"] = g.key;
            gj["block_id"] = g.block ? nlohmann::ordered_json(*g.block) : nlohmann::ordered_json();
            gj["rows"] = nlohmann::ordered_json::array();
            for (const auto& r : g.rows) gj["rows"].push_back(row_to_json(r));
            j["groups"].push_back(std::move(gj));
        }
        return j;
    }

}  // namespace tracescope::store
