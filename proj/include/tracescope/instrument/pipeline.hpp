#pragma once

#include "tracescope/instrument/rewrite.hpp"
#include "tracescope/static_info.hpp"
#include "tracescope/trace_spec.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace tracescope::instrument {

    struct instrumented_program {
        std::string source{};
        trace_spec spec{};
        static_info statics{};
        rewrite_plan plan{};
    };

    // parse, validate, collect static info, normalize, instrument, emit.
    // Throws the first validation issue, ParseError or UnsupportedConstruct.
    instrumented_program instrument_source(std::string_view source, const trace_spec& spec, const std::string& file);

    // Writes a runnable copy of the bundle into `shadow_dir`: the entry file
    // is replaced by its instrumented text, the runtime module is added and
    // static info goes to "<entry>.static.json". Other files are copied as is.
    void write_shadow(const instrumented_program& program, const std::filesystem::path& shadow_dir,
                      const std::string& entry, const std::map<std::string, std::string>& bundle);

    std::string sidecar_name(const std::string& entry);

}  // namespace tracescope::instrument
