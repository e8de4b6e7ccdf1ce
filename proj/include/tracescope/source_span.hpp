#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace tracescope {

    inline constexpr std::string_view module_scope = "<module>";

    // Lines are 1-based, columns 0-based.
    struct source_span {
        std::string file{};
        int start_line{0};
        int end_line{0};
        int start_col{0};
        int end_col{0};

        bool empty() const { return start_line == 0; }
        bool valid() const { return start_line >= 1 && start_line <= end_line && start_col >= 0 && end_col >= 0; }
        bool contains_line(int line) const { return line >= start_line && line <= end_line; }

        friend bool operator==(const source_span&, const source_span&) = default;
    };

    nlohmann::ordered_json span_to_json(const source_span& s);
    source_span span_from_json(const nlohmann::ordered_json& j);

}  // namespace tracescope
