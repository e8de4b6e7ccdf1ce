#include "tracescope/instrument/pipeline.hpp"

#include "tracescope/error.hpp"
#include "tracescope/instrument/static_analysis.hpp"
#include "tracescope/instrument/validate.hpp"
#include "tracescope/python/parser.hpp"
#include "tracescope/recorder/event_log.hpp"

#include <fstream>

namespace tracescope::instrument {

    namespace fs = std::filesystem;

    instrumented_program instrument_source(std::string_view source, const trace_spec& spec, const std::string& file) {
        auto m = python::parse_module(source);
        auto scopes = scope_table::build(m, file);
        instrumented_program out;
        out.spec = validate_spec(spec, m, scopes, file).value();
        if (out.spec.subject_entry.empty()) out.spec.subject_entry = file;
        out.statics = collect_static_info(m, scopes, file);
        add_expression_dependencies(out.statics, scopes, out.spec);
        out.plan = rewrite_plan::for_module(m);
        auto marked = m;
        mark_tracked_expressions(marked, scopes, out.spec);
        auto normalized = normalize(marked, scopes, out.plan);
        auto hooked = instrument(normalized, out.spec, scopes, out.plan);
        out.source = emit(hooked, out.plan);
        return out;
    }

    std::string sidecar_name(const std::string& entry) { return entry + ".static.json"; }

    namespace {
        void write_file(const fs::path& path, std::string_view text) {
            if (path.has_parent_path()) fs::create_directories(path.parent_path());
            std::ofstream out(path, std::ios::binary | std::ios::trunc);
            if (!out) throw error(error_code::io_error, "cannot write " + path.string());
            out.write(text.data(), static_cast<std::streamsize>(text.size()));
            if (!out) throw error(error_code::io_error, "cannot write " + path.string());
        }
    }  // namespace

    void write_shadow(const instrumented_program& program, const fs::path& shadow_dir, const std::string& entry,
                      const std::map<std::string, std::string>& bundle) {
        fs::create_directories(shadow_dir);
        for (const auto& [name, text] : bundle) {
            auto rel = fs::path(name).lexically_normal();
            if (rel.is_absolute() || (!rel.empty() && *rel.begin() == ".."))
                throw error(error_code::invalid_argument, "bundle path escapes the bundle: " + name);
            if (name == entry) continue;
            write_file(shadow_dir / rel, text);
        }
        write_file(shadow_dir / entry, program.source);
        write_file(shadow_dir / (program.plan.runtime_module + ".py"), runtime_module_source());
        write_file(shadow_dir / sidecar_name(entry), static_info_to_json(program.statics).dump(2));
    }

}  // namespace tracescope::instrument
