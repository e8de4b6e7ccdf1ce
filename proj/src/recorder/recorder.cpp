#include "tracescope/recorder/recorder.hpp"

#include "tracescope/error.hpp"

#include <algorithm>

namespace tracescope {

    recorder::recorder(trace_spec spec, recorder_options options)
        : trace_(make_empty_trace(std::move(spec))), options_(options), owner_(std::this_thread::get_id()) {}

    void recorder::on_event() {
        if (std::this_thread::get_id() != owner_)
            throw error(error_code::thread_violation, "recorder used from a second thread");
        if (finalized_) throw error(error_code::invalid_state, "recorder already finalized");
        if (++events_ > options_.event_cap)
            throw error(error_code::trace_too_large,
                        "trace exceeds the cap of " + std::to_string(options_.event_cap) + " events");
    }

    void recorder::mismatch(const std::string& what) const {
        throw error(error_code::stack_mismatch, what + " (innermost open block is " + std::to_string(stack_.back()) + ")");
    }

    block_record& recorder::open(block_type type, int line, std::string name, std::string label) {
        block_record b;
        b.id = static_cast<block_id>(trace_.blocks.size());
        b.type = type;
        b.line = line;
        b.ts = next_ts_++;
        b.parent = stack_.back();
        b.name = std::move(name);
        b.label = std::move(label);
        at(stack_.back()).children.push_back(b.id);
        trace_.blocks.push_back(std::move(b));
        return trace_.blocks.back();
    }

    std::optional<int> recorder::current_iteration() const {
        for (auto it = stack_.rbegin(); it != stack_.rend(); ++it) {
            const auto& b = trace_.blocks[static_cast<std::size_t>(*it)];
            if (b.type == block_type::iteration) return b.iteration;
        }
        return std::nullopt;
    }

    block_id recorder::enter_call(const std::string& name, int line, std::string label) {
        on_event();
        if (label.empty()) label = name + "()";
        auto& b = open(block_type::call, line, name, std::move(label));
        stack_.push_back(b.id);
        return b.id;
    }

    void recorder::exit_call(block_id id) {
        on_event();
        if (stack_.back() != id || at(id).type != block_type::call)
            mismatch("exit of call " + std::to_string(id) + " that is not innermost");
        stack_.pop_back();
    }

    block_id recorder::begin_loop(int line, const std::string& key, std::string label) {
        on_event();
        if (label.empty()) label = "loop " + key;
        auto& b = open(block_type::loop, line, key, std::move(label));
        stack_.push_back(b.id);
        iteration_counters_[b.id] = 0;
        return b.id;
    }

    int recorder::begin_iteration(block_id loop) {
        on_event();
        auto counter = iteration_counters_.find(loop);
        if (counter == iteration_counters_.end()) mismatch("iteration of loop " + std::to_string(loop) + " that is not open");
        const auto& top = at(stack_.back());
        if (top.type == block_type::iteration && top.parent == loop) stack_.pop_back();
        if (stack_.back() != loop) mismatch("iteration of loop " + std::to_string(loop) + " that is not innermost");
        int index = counter->second++;
        auto& b = open(block_type::iteration, at(loop).line, at(loop).name, "iteration " + std::to_string(index));
        b.iteration = index;
        stack_.push_back(b.id);
        return index;
    }

    void recorder::end_loop(block_id loop) {
        on_event();
        if (!iteration_counters_.contains(loop)) return;
        const auto& top = at(stack_.back());
        if (top.type == block_type::iteration && top.parent == loop) stack_.pop_back();
        if (stack_.back() != loop) mismatch("end of loop " + std::to_string(loop) + " that is not innermost");
        stack_.pop_back();
        iteration_counters_.erase(loop);
    }

    block_id recorder::record_value(const std::string& name, value v, int line, bool is_variable) {
        on_event();
        auto iteration = current_iteration();
        auto short_name = name.substr(0, name.rfind('@'));
        auto label = short_name + " = " + v.to_display();
        auto& b = open(block_type::tracked, line, name, std::move(label));
        b.val = std::move(v);
        b.is_variable = is_variable;
        b.iteration = iteration;
        return b.id;
    }

    std::int64_t recorder::record_custom(const std::string& label, value v, int line) {
        on_event();
        custom_record c;
        c.id = static_cast<std::int64_t>(trace_.customs.size());
        c.label = label;
        c.line = line;
        c.ts = next_ts_++;
        c.val = std::move(v);
        c.parent = stack_.back();
        trace_.customs.push_back(std::move(c));
        return trace_.customs.back().id;
    }

    void recorder::abort(block_id id) {
        on_event();
        if (id <= 0 || std::find(stack_.begin(), stack_.end(), id) == stack_.end()) return;
        while (stack_.size() > 1) {
            auto top = stack_.back();
            stack_.pop_back();
            at(top).aborted = true;
            iteration_counters_.erase(top);
            if (top == id) break;
        }
    }

    trace recorder::finalize(bool abnormal_exit) {
        if (std::this_thread::get_id() != owner_)
            throw error(error_code::thread_violation, "recorder used from a second thread");
        if (finalized_) throw error(error_code::invalid_state, "recorder already finalized");
        bool left_open = stack_.size() > 1;
        while (stack_.size() > 1) {
            at(stack_.back()).aborted = true;
            stack_.pop_back();
        }
        iteration_counters_.clear();
        finalized_ = true;
        trace_.aborted = abnormal_exit || left_open;
        return std::move(trace_);
    }

}  // namespace tracescope
