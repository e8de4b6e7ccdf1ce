#pragma once

#include "tracescope/store/trace_store.hpp"

#include <nlohmann/json.hpp>

namespace tracescope::store {

    // Quantitative or nominal, decided from the recorded values of a name.
    enum class data_type { quantitative, nominal };

    enum class plot_kind { histogram, bar, scatter, parallel_coordinates, small_multiples, box };

    struct data_signature {
        std::vector<data_type> types{};
        bool grouped{false};

        friend bool operator==(const data_signature&, const data_signature&) = default;
    };

    // Q when every non-NaN, non-infinite value is a number (and at least one
    // value exists), N otherwise.
    data_type classify(const std::vector<value_row>& rows);

    // The plots a signature may be shown with. Empty for unsupported signatures.
    std::vector<plot_kind> admissible_plots(const data_signature& sig);

    struct plot_query {
        std::vector<std::string> names{};
        std::map<std::string, value_filter> filters{};
        std::optional<splitter> group_by{};
        std::optional<join_scope> join{};
        std::optional<plot_kind> kind{};
        std::size_t group_cap{default_group_cap};
    };

    struct axis_info {
        std::string name{};
        data_type type{data_type::quantitative};
        std::optional<double> min{};
        std::optional<double> max{};
        std::size_t count{};
        std::size_t nan_count{};
        std::size_t inf_count{};
        std::size_t non_numeric{};
    };

    struct plot_payload {
        plot_kind kind{plot_kind::histogram};
        data_signature signature{};
        std::vector<axis_info> axes{};
        std::vector<value_row> rows{};
        std::optional<joined> tuples{};
        std::vector<value_group> groups{};
    };

    // Resolves a query against the store. Defaults the plot kind to the first
    // admissible one; throws NotAdmissible for a kind outside the table.
    plot_payload run_plot(const trace_store& store, const plot_query& q);

    std::string_view to_string(data_type t);
    std::string_view to_string(plot_kind k);
    std::optional<plot_kind> plot_kind_from_string(std::string_view s);

    nlohmann::ordered_json row_to_json(const value_row& r);
    nlohmann::ordered_json filter_to_json(const value_filter& f);
    value_filter filter_from_json(const nlohmann::ordered_json& j);
    nlohmann::ordered_json plot_query_to_json(const plot_query& q);
    plot_query plot_query_from_json(const nlohmann::ordered_json& j);
    nlohmann::ordered_json plot_to_json(const plot_payload& p);

}  // namespace tracescope::store
