#pragma once

#include "tracescope/service/runner.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace tracescope::testing {

    inline std::string slurp(const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    inline service::run_config test_config() {
        service::run_config c;
        c.python = TS_PYTHON;
        c.timeout = std::chrono::seconds(60);
        return c;
    }

    inline service::source_bundle single_file(const std::string& text, const std::string& name = "main.py") {
        service::source_bundle b;
        b.entry = name;
        b.files[name] = text;
        return b;
    }

    // Runs Python source as a standalone program.
    inline service::run_result run_source(const std::string& text) {
        return service::run_plain(single_file(text), test_config());
    }

    inline std::filesystem::path fixture(const std::string& rel) {
        return std::filesystem::path(TS_FIXTURE_DIR) / rel;
    }

}  // namespace tracescope::testing
