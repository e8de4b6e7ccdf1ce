#pragma once

#include "tracescope/trace.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace tracescope {

    // Hierarchical trace file: one JSON object per block, nested via
    // `children`, with a top-level `format_version`.
    std::string serialize_trace(const trace& t);
    trace deserialize_trace(std::string_view bytes);

    void write_trace_file(const trace& t, const std::filesystem::path& path);
    trace read_trace_file(const std::filesystem::path& path);

}  // namespace tracescope
