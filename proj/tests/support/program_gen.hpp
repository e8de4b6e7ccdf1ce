#pragma once

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace tracescope::testing {

    struct generated_program {
        std::string source{};
        std::set<std::string> functions{};
        int statements{0};
        // Data dependencies recorded while generating: "v@scope" -> names read.
        std::map<std::string, std::set<std::string>> deps{};
    };

    /// Small random straight-line Python programs with helper functions,
    /// loops and branches. Functions only call earlier functions, so every
    /// program terminates; arithmetic stays modulo 97.
    inline generated_program random_program(std::uint64_t seed, int max_statements = 30) {
        std::mt19937_64 rng(seed);
        generated_program out;
        auto pick = [&](const std::vector<std::string>& v) { return v[rng() % v.size()]; };
        std::vector<std::string> fns;
        std::string src;
        int budget = max_statements;

        std::set<std::string> reads;
        std::string scope = "<module>";
        auto operand = [&](const std::vector<std::string>& vars) -> std::string {
            if (vars.empty() || rng() % 4 == 0) return std::to_string(1 + rng() % 9);
            auto v = pick(vars);
            reads.insert(v + "@" + scope);
            return v;
        };
        auto rhs = [&](const std::vector<std::string>& vars) -> std::string {
            reads.clear();
            std::string e = operand(vars);
            int terms = static_cast<int>(rng() % 3);
            for (int k = 0; k < terms; ++k) e += std::string(rng() % 2 ? " + " : " * ") + operand(vars);
            if (!fns.empty() && rng() % 3 == 0) {
                auto f = pick(fns);
                reads.insert(f + "@<module>");
                e = f + "(" + e + ", " + operand(vars) + ")";
            }
            return "(" + e + ") % 97";
        };
        auto record = [&](const std::string& v) { out.deps[v + "@" + scope].insert(reads.begin(), reads.end()); };

        int n_fns = 1 + static_cast<int>(rng() % 3);
        for (int f = 0; f < n_fns && budget > 4; ++f) {
            std::string name = "fn" + std::to_string(f);
            scope = name;
            src += "def " + name + "(a, b):\n";
            --budget;
            std::vector<std::string> locals{"a", "b"};
            int body = 1 + static_cast<int>(rng() % 3);
            for (int k = 0; k < body && budget > 3; ++k, --budget) {
                std::string v = "l" + std::to_string(rng() % 3);
                src += "    " + v + " = " + rhs(locals) + "\n";
                record(v);
                if (std::find(locals.begin(), locals.end(), v) == locals.end()) locals.push_back(v);
            }
            src += "    return " + pick(locals) + "\n\n";
            --budget;
            fns.push_back(name);
            out.functions.insert(name);
        }

        scope = "<module>";
        std::vector<std::string> globals;
        auto fresh_global = [&] {
            std::string v = "g" + std::to_string(rng() % 6);
            return v;
        };
        // Names assigned under a branch only become readable once assigned unconditionally.
        auto assign = [&](const std::string& indent, bool definite = true) {
            auto v = fresh_global();
            src += indent + v + " = " + rhs(globals) + "\n";
            record(v);
            if (definite && std::find(globals.begin(), globals.end(), v) == globals.end()) globals.push_back(v);
            --budget;
        };
        assign("");
        while (budget > 0) {
            auto roll = rng() % 10;
            if (roll < 6 || budget < 4) {
                assign("");
            } else if (roll < 8) {
                src += "for i in range(" + std::to_string(1 + rng() % 4) + "):\n";
                --budget;
                out.deps["i@<module>"].insert("range@<builtin>");
                if (std::find(globals.begin(), globals.end(), "i") == globals.end()) globals.push_back("i");
                int body = 1 + static_cast<int>(rng() % 2);
                for (int k = 0; k < body && budget > 0; ++k) assign("    ");
                if (budget == 0) break;
            } else {
                src += "if " + operand(globals) + " % 2 == 0:\n";
                --budget;
                assign("    ", false);
                if (budget > 1) {
                    src += "else:\n";
                    assign("    ", false);
                }
            }
        }
        src += "print(" + (globals.empty() ? std::string("0") : globals.back()) + ")\n";
        out.source = src;
        out.statements = max_statements - budget;
        return out;
    }

}  // namespace tracescope::testing
