#include "tracescope/value.hpp"

#include "tracescope/error.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace tracescope {

    value value::boolean(bool v) {
        value out;
        out.kind = value_kind::boolean;
        out.b = v;
        return out;
    }

    value value::integer(std::int64_t v) {
        value out;
        out.kind = value_kind::integer;
        out.i = v;
        return out;
    }

    value value::real(double v) {
        value out;
        out.kind = value_kind::real;
        out.d = v;
        return out;
    }

    value value::string(std::string v) {
        value out;
        out.kind = value_kind::string;
        out.s = std::move(v);
        return out;
    }

    value value::opaque(std::string rendering) {
        value out;
        out.kind = value_kind::opaque;
        if (rendering.size() > opaque_render_cap) rendering.resize(opaque_render_cap);
        out.s = std::move(rendering);
        return out;
    }

    bool value::is_finite_number() const {
        if (kind == value_kind::integer) return true;
        return kind == value_kind::real && std::isfinite(d);
    }

    bool value::is_nan() const { return kind == value_kind::real && std::isnan(d); }

    std::string value::to_display() const {
        switch (kind) {
            case value_kind::none: return "None";
            case value_kind::boolean: return b ? "True" : "False";
            case value_kind::integer: return std::to_string(i);
            case value_kind::real: {
                if (std::isnan(d)) return "nan";
                if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
                std::ostringstream os;
                os.precision(std::numeric_limits<double>::max_digits10);
                os << d;
                return os.str();
            }
            case value_kind::string:
            case value_kind::opaque: return s;
        }
        return {};
    }

    bool operator==(const value& a, const value& b) {
        if (a.kind != b.kind) return false;
        switch (a.kind) {
            case value_kind::none: return true;
            case value_kind::boolean: return a.b == b.b;
            case value_kind::integer: return a.i == b.i;
            case value_kind::real:
                // NaN sentinels compare equal to each other so round-trips are checkable.
                if (std::isnan(a.d) || std::isnan(b.d)) return std::isnan(a.d) && std::isnan(b.d);
                return a.d == b.d;
            case value_kind::string:
            case value_kind::opaque: return a.s == b.s;
        }
        return false;
    }

    nlohmann::ordered_json value_to_json(const value& v) {
        switch (v.kind) {
            case value_kind::none: return nullptr;
            case value_kind::boolean: return v.b;
            case value_kind::integer: return v.i;
            case value_kind::real:
                if (std::isnan(v.d)) return std::string(sentinel_nan);
                if (std::isinf(v.d)) return std::string(v.d > 0 ? sentinel_pos_inf : sentinel_neg_inf);
                return v.d;
            case value_kind::string:
                // Genuine strings that start with the sentinel byte are escaped by doubling it.
                if (v.s.starts_with(sentinel_prefix)) return std::string(sentinel_prefix) + v.s;
                return v.s;
            case value_kind::opaque: return std::string(sentinel_opaque) + v.s;
        }
        return nullptr;
    }

    value value_from_json(const nlohmann::ordered_json& j) {
        if (j.is_null()) return value::none();
        if (j.is_boolean()) return value::boolean(j.get<bool>());
        if (j.is_number_integer()) return value::integer(j.get<std::int64_t>());
        if (j.is_number_float()) return value::real(j.get<double>());
        if (j.is_string()) {
            auto s = j.get<std::string>();
            if (!s.starts_with(sentinel_prefix)) return value::string(std::move(s));
            if (s == sentinel_nan) return value::real(std::numeric_limits<double>::quiet_NaN());
            if (s == sentinel_pos_inf) return value::real(std::numeric_limits<double>::infinity());
            if (s == sentinel_neg_inf) return value::real(-std::numeric_limits<double>::infinity());
            if (s.starts_with(sentinel_opaque)) {
                value out;
                out.kind = value_kind::opaque;
                out.s = s.substr(sentinel_opaque.size());
                return out;
            }
            if (s.size() >= 2 && s[1] == sentinel_prefix[0]) return value::string(s.substr(1));
            throw error(error_code::malformed_trace, "unknown value sentinel");
        }
        throw error(error_code::malformed_trace, "value must be a scalar");
    }

    std::string_view to_string(value_kind k) {
        switch (k) {
            case value_kind::none: return "none";
            case value_kind::boolean: return "bool";
            case value_kind::integer: return "int";
            case value_kind::real: return "float";
            case value_kind::string: return "str";
            case value_kind::opaque: return "repr";
        }
        return "none";
    }

    std::optional<value_kind> value_kind_from_string(std::string_view s) {
        for (auto k : {value_kind::none, value_kind::boolean, value_kind::integer, value_kind::real,
                       value_kind::string, value_kind::opaque}) {
            if (to_string(k) == s) return k;
        }
        return std::nullopt;
    }

}  // namespace tracescope
