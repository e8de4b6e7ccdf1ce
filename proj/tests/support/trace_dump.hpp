#pragma once

#include "tracescope/trace.hpp"

#include <cmath>
#include <sstream>
#include <string>

namespace tracescope::testing {

    // Independent of operator==: renders every observable field as text.
    inline std::string render_value(const value& v) {
        std::ostringstream os;
        os << static_cast<int>(v.kind) << ':';
        switch (v.kind) {
            case value_kind::none: break;
            case value_kind::boolean: os << v.b; break;
            case value_kind::integer: os << v.i; break;
            case value_kind::real:
                if (std::isnan(v.d)) os << "NaN";
                else os << std::hexfloat << v.d;
                break;
            default: os << v.s.size() << '/' << v.s;
        }
        return os.str();
    }

    inline std::string dump(const trace& t) {
        std::ostringstream os;
        os << "aborted=" << t.aborted << '\n';
        for (const auto& b : t.blocks) {
            os << b.id << '|' << static_cast<int>(b.type) << '|' << b.line << '|' << b.ts << '|'
               << (b.parent ? std::to_string(*b.parent) : "-") << '|' << b.label << '|' << b.name << '|'
               << (b.val ? render_value(*b.val) : "-") << '|' << (b.iteration ? std::to_string(*b.iteration) : "-")
               << '|' << b.is_variable << '|' << b.aborted << '|';
            for (auto c : b.children) os << c << ',';
            os << '\n';
        }
        for (const auto& c : t.customs)
            os << "c" << c.id << '|' << c.label << '|' << c.line << '|' << c.ts << '|' << render_value(c.val) << '|'
               << c.parent << '\n';
        for (const auto& target : t.spec.targets)
            os << "t|" << target.name << '|' << target.scope << '|' << static_cast<int>(target.kind) << '\n';
        return os.str();
    }

}  // namespace tracescope::testing
