#pragma once

#include "tracescope/trace.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace tracescope::testing {

    struct gen_options {
        std::size_t blocks{500};
        std::size_t customs{10};
        std::vector<std::string> names{"x@<module>", "y@f", "loss@train", "flag@<module>", "label@g"};
        double special_rate{0.05};
    };

    inline value random_value(std::mt19937_64& rng, double special_rate) {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        if (unit(rng) < special_rate) {
            switch (rng() % 6) {
                case 0: return value::real(std::numeric_limits<double>::quiet_NaN());
                case 1: return value::real(std::numeric_limits<double>::infinity());
                case 2: return value::real(-std::numeric_limits<double>::infinity());
                case 3: return value::none();
                case 4: return value::string("\x1fnan");
                default: return value::opaque("[1, 2, 3]");
            }
        }
        switch (rng() % 5) {
            case 0: return value::integer(static_cast<std::int64_t>(rng() % 2001) - 1000);
            case 1: return value::boolean(rng() % 2 == 0);
            case 2: return value::string("s" + std::to_string(rng() % 7));
            default: return value::real(std::uniform_real_distribution<double>(-1e3, 1e3)(rng));
        }
    }

    /// Produces a trace satisfying every structural invariant, built by a
    /// random walk over a call/loop stack.
    inline trace random_trace(std::uint64_t seed, const gen_options& opt = {}) {
        std::mt19937_64 rng(seed);
        trace_spec spec;
        for (const auto& n : opt.names) {
            auto at = n.rfind('@');
            spec.targets.push_back(track_target{n.substr(0, at), target_kind::variable, n.substr(at + 1), {}});
        }
        trace t = make_empty_trace(spec);
        timestamp clock = 1;

        struct frame {
            block_id id;
            block_type type;
            int next_iter{0};
            int cur_iter{-1};
        };
        std::vector<frame> stack{{0, block_type::root}};
        auto add = [&](block_type type) -> block_record& {
            block_record b;
            b.id = static_cast<block_id>(t.blocks.size());
            b.type = type;
            b.parent = stack.back().id;
            b.ts = clock++;
            b.line = 1 + static_cast<int>(rng() % 60);
            t.blocks[static_cast<std::size_t>(*b.parent)].children.push_back(b.id);
            t.blocks.push_back(std::move(b));
            return t.blocks.back();
        };
        auto current_iter = [&]() -> std::optional<int> {
            for (auto it = stack.rbegin(); it != stack.rend(); ++it)
                if (it->type == block_type::iteration) return it->cur_iter;
            return std::nullopt;
        };

        while (t.blocks.size() < opt.blocks) {
            auto& top = stack.back();
            auto roll = rng() % 100;
            if (top.type == block_type::loop) {
                if (roll < 70 && t.blocks.size() + 1 < opt.blocks) {
                    auto& it = add(block_type::iteration);
                    it.iteration = top.next_iter;
                    it.label = "iteration " + std::to_string(top.next_iter);
                    frame f{it.id, block_type::iteration};
                    f.cur_iter = top.next_iter++;
                    stack.push_back(f);
                } else {
                    stack.pop_back();
                }
                continue;
            }
            if (roll < 45) {
                auto& b = add(block_type::tracked);
                const auto& q = opt.names[rng() % opt.names.size()];
                b.name = q;
                b.val = random_value(rng, opt.special_rate);
                b.is_variable = true;
                b.iteration = current_iter();
                b.label = q.substr(0, q.rfind('@')) + " = " + b.val->to_display();
            } else if (roll < 60) {
                auto& b = add(block_type::call);
                b.name = "fn" + std::to_string(rng() % 5);
                b.label = b.name + "()";
                stack.push_back({b.id, block_type::call});
            } else if (roll < 70) {
                auto& b = add(block_type::loop);
                b.name = std::to_string(b.line) + ":4";
                b.label = "for loop, line " + std::to_string(b.line);
                stack.push_back({b.id, block_type::loop});
            } else if (stack.size() > 1) {
                stack.pop_back();
            }
        }
        std::vector<block_id> candidates;
        for (const auto& b : t.blocks)
            if (b.type != block_type::tracked) candidates.push_back(b.id);
        for (std::size_t k = 0; k < opt.customs; ++k) {
            custom_record c;
            c.id = static_cast<std::int64_t>(k);
            c.label = "c" + std::to_string(k % 3);
            c.parent = candidates[rng() % candidates.size()];
            c.ts = clock++;
            c.line = 1 + static_cast<int>(rng() % 60);
            c.val = random_value(rng, opt.special_rate);
            t.customs.push_back(c);
        }
        return t;
    }

}  // namespace tracescope::testing
