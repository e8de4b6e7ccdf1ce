#include "tracescope/recorder/event_log.hpp"

#include "tracescope/error.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <map>

#include <nlohmann/json.hpp>

namespace tracescope {

    namespace {

        [[noreturn]] void malformed(std::size_t line_no, const std::string& what) {
            throw error(error_code::malformed_trace, "event " + std::to_string(line_no) + ": " + what);
        }

        std::vector<std::string_view> split_tabs(std::string_view line) {
            std::vector<std::string_view> out;
            std::size_t start = 0;
            while (true) {
                auto tab = line.find('\t', start);
                out.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
                if (tab == std::string_view::npos) break;
                start = tab + 1;
            }
            return out;
        }

        std::int64_t to_int(std::string_view text, std::size_t line_no) {
            std::int64_t v{};
            auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
            if (ec != std::errc{} || ptr != text.data() + text.size()) malformed(line_no, "bad integer '" + std::string(text) + "'");
            return v;
        }

        std::string json_string(std::string_view text, std::size_t line_no) {
            try {
                return nlohmann::json::parse(text).get<std::string>();
            } catch (const std::exception&) {
                malformed(line_no, "bad string field");
            }
        }

        double to_real(std::string_view text, std::size_t line_no) {
            if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
            if (text == "inf") return std::numeric_limits<double>::infinity();
            if (text == "-inf") return -std::numeric_limits<double>::infinity();
            std::string copy(text);
            char* end = nullptr;
            double v = std::strtod(copy.c_str(), &end);
            if (end != copy.c_str() + copy.size()) malformed(line_no, "bad float '" + copy + "'");
            return v;
        }

        // Fields from `first` on hold a typed value.
        value typed_value(const std::vector<std::string_view>& f, std::size_t first, std::size_t line_no) {
            if (f.size() < first + 2) malformed(line_no, "missing value");
            auto code = f[first];
            auto payload = f[first + 1];
            if (code == "n") return value::none();
            if (code == "b") return value::boolean(payload == "1");
            if (code == "i") return value::integer(to_int(payload, line_no));
            if (code == "f") return value::real(to_real(payload, line_no));
            if (code == "s") return value::string(json_string(payload, line_no));
            if (code == "r") {
                if (f.size() < first + 3) malformed(line_no, "missing rendering");
                return value::opaque(json_string(f[first + 2], line_no));
            }
            if (code == "e") return value::opaque("error: " + json_string(payload, line_no));
            malformed(line_no, "unknown value type '" + std::string(code) + "'");
        }

        std::string source_label(const std::vector<std::string>& lines, int line) {
            if (line < 1 || static_cast<std::size_t>(line) > lines.size()) return {};
            const auto& text = lines[static_cast<std::size_t>(line - 1)];
            auto first = text.find_first_not_of(" \t");
            if (first == std::string::npos) return {};
            auto last = text.find_last_not_of(" \t\r");
            return text.substr(first, last - first + 1);
        }

    }  // namespace

    replay_outcome replay_event_log(std::string_view log, trace_spec spec, const std::vector<std::string>& source_lines,
                                    recorder_options options, bool tolerate_overflow) {
        recorder rec(std::move(spec), options);
        replay_outcome out;
        std::map<std::int64_t, block_id> handles;
        auto handle = [&](std::string_view text, std::size_t line_no) -> std::optional<block_id> {
            auto it = handles.find(to_int(text, line_no));
            if (it == handles.end()) return std::nullopt;
            return it->second;
        };

        std::size_t pos = 0;
        std::size_t line_no = 0;
        while (pos < log.size()) {
            auto nl = log.find('\n', pos);
            // A line without its newline was cut off mid-write.
            if (nl == std::string_view::npos) break;
            auto line = log.substr(pos, nl - pos);
            pos = nl + 1;
            ++line_no;
            if (line.empty()) continue;
            auto f = split_tabs(line);
            auto kind = f[0];
            auto need = [&](std::size_t n) {
                if (f.size() < n) malformed(line_no, "too few fields");
            };
            if (kind == "C") {
                need(4);
                int src_line = static_cast<int>(to_int(f[2], line_no));
                auto name = json_string(f[3], line_no);
                auto label = source_label(source_lines, src_line);
                handles[to_int(f[1], line_no)] = rec.enter_call(name, src_line, label.empty() ? name + "()" : label);
            } else if (kind == "X") {
                need(2);
                auto id = handle(f[1], line_no);
                if (!id) throw error(error_code::stack_mismatch, "exit of an unknown call handle");
                rec.exit_call(*id);
            } else if (kind == "A") {
                need(2);
                if (auto id = handle(f[1], line_no)) rec.abort(*id);
            } else if (kind == "L") {
                need(4);
                int src_line = static_cast<int>(to_int(f[2], line_no));
                handles[to_int(f[1], line_no)] =
                        rec.begin_loop(src_line, std::string(f[3]), source_label(source_lines, src_line));
            } else if (kind == "I") {
                need(2);
                auto id = handle(f[1], line_no);
                if (!id) throw error(error_code::stack_mismatch, "iteration of an unknown loop handle");
                rec.begin_iteration(*id);
            } else if (kind == "Z") {
                need(2);
                if (auto id = handle(f[1], line_no)) rec.end_loop(*id);
            } else if (kind == "V") {
                need(6);
                int src_line = static_cast<int>(to_int(f[1], line_no));
                rec.record_value(json_string(f[3], line_no), typed_value(f, 4, line_no), src_line, f[2] == "1");
            } else if (kind == "U") {
                need(5);
                int src_line = static_cast<int>(to_int(f[1], line_no));
                rec.record_custom(json_string(f[2], line_no), typed_value(f, 3, line_no), src_line);
            } else if (kind == "O") {
                out.overflowed = true;
                if (tolerate_overflow) break;
                throw error(error_code::trace_too_large, "subject produced more events than the configured cap");
            } else if (kind == "T") {
                throw error(error_code::thread_violation, "subject recorded events from more than one thread");
            } else if (kind == "E") {
                need(2);
                out.uncaught = json_string(f[1], line_no);
            } else if (kind == "F") {
                out.finished = true;
            } else {
                malformed(line_no, "unknown event '" + std::string(kind) + "'");
            }
        }
        out.events = rec.events();
        out.result = rec.finalize(!out.finished || out.uncaught.has_value());
        return out;
    }

}  // namespace tracescope
