#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace tracescope {

    enum class value_kind { none, boolean, integer, real, string, opaque };

    /// A snapshotted scalar from the subject program.
    ///
    /// `real` covers NaN and the infinities. `opaque` holds the truncated
    /// textual rendering of a compound object and is never plottable.
    struct value {
        value_kind kind{value_kind::none};
        bool b{};
        std::int64_t i{};
        double d{};
        std::string s{};

        static value none() { return {}; }
        static value boolean(bool v);
        static value integer(std::int64_t v);
        static value real(double v);
        static value string(std::string v);
        static value opaque(std::string rendering);

        bool is_numeric() const { return kind == value_kind::integer || kind == value_kind::real; }
        bool is_finite_number() const;
        bool is_nan() const;
        // Numeric view; only meaningful when is_numeric().
        double as_double() const { return kind == value_kind::integer ? static_cast<double>(i) : d; }

        // Short human rendering used by the CLI and labels.
        std::string to_display() const;

        friend bool operator==(const value& a, const value& b);
    };

    inline constexpr std::size_t opaque_render_cap = 256;

    // Reserved string sentinels for values the interchange format cannot carry.
    inline constexpr std::string_view sentinel_prefix = "\x1f";
    inline constexpr std::string_view sentinel_nan = "\x1fnan";
    inline constexpr std::string_view sentinel_pos_inf = "\x1finf";
    inline constexpr std::string_view sentinel_neg_inf = "\x1f-inf";
    inline constexpr std::string_view sentinel_opaque = "\x1fr:";

    nlohmann::ordered_json value_to_json(const value& v);
    value value_from_json(const nlohmann::ordered_json& j);

    std::string_view to_string(value_kind k);
    std::optional<value_kind> value_kind_from_string(std::string_view s);

}  // namespace tracescope
