#include "tracescope/trace_io.hpp"

#include "tracescope/error.hpp"

#include <fstream>
#include <sstream>

namespace tracescope {

    using json = nlohmann::ordered_json;

    namespace {

        json block_to_json(const trace& t, const block_record& b) {
            json j;
            j["id"] = b.id;
            j["type"] = std::string(to_string(b.type));
            j["line"] = b.line;
            j["ts"] = b.ts;
            j["parent"] = b.parent ? json(*b.parent) : json(nullptr);
            j["label"] = b.label;
            if (!b.name.empty()) j["name"] = b.name;
            if (b.val) j["value"] = value_to_json(*b.val);
            if (b.iteration) j["iter"] = *b.iteration;
            if (b.type == block_type::tracked) j["is_var"] = b.is_variable;
            if (b.aborted) j["aborted"] = true;
            json children = json::array();
            for (auto c : b.children) children.push_back(block_to_json(t, t.at(c)));
            j["children"] = std::move(children);
            return j;
        }

        template <typename T>
        T required(const json& j, const char* key) {
            auto it = j.find(key);
            if (it == j.end()) throw error(error_code::malformed_trace, std::string("missing field '") + key + "'");
            try {
                return it->get<T>();
            } catch (const nlohmann::json::exception&) {
                throw error(error_code::malformed_trace, std::string("field '") + key + "' has the wrong type");
            }
        }

        void block_from_json(const json& j, std::optional<block_id> expected_parent, std::vector<block_record>& out) {
            if (!j.is_object()) throw error(error_code::malformed_trace, "block must be an object");
            block_record b;
            b.id = required<block_id>(j, "id");
            auto type = block_type_from_string(required<std::string>(j, "type"));
            if (!type) throw error(error_code::malformed_trace, "unknown block type");
            b.type = *type;
            b.line = required<int>(j, "line");
            b.ts = required<timestamp>(j, "ts");
            const auto& parent = j.at("parent");
            if (!parent.is_null()) b.parent = parent.get<block_id>();
            if (b.parent != expected_parent)
                throw error(error_code::malformed_trace, "parent id of block " + std::to_string(b.id) +
                                                                 " disagrees with nesting");
            b.label = j.value("label", "");
            b.name = j.value("name", "");
            if (j.contains("value")) b.val = value_from_json(j["value"]);
            if (j.contains("iter")) b.iteration = j["iter"].get<int>();
            b.is_variable = j.value("is_var", false);
            b.aborted = j.value("aborted", false);
            if (b.id < 0) throw error(error_code::malformed_trace, "negative block id");
            auto idx = static_cast<std::size_t>(b.id);
            if (out.size() <= idx) out.resize(idx + 1, block_record{.id = -1});
            if (out[idx].id != -1) throw error(error_code::malformed_trace, "duplicate block id");
            const auto& children = j.at("children");
            if (!children.is_array()) throw error(error_code::malformed_trace, "children must be an array");
            for (const auto& c : children) b.children.push_back(required<block_id>(c, "id"));
            auto id = b.id;
            out[idx] = std::move(b);
            for (const auto& c : children) block_from_json(c, id, out);
        }

    }  // namespace

    std::string serialize_trace(const trace& t) {
        json j;
        j["format_version"] = trace_format_version;
        j["aborted"] = t.aborted;
        j["spec"] = spec_to_json(t.spec);
        j["static_info"] = static_info_to_json(t.statics);
        j["root"] = block_to_json(t, t.root());
        json customs = json::array();
        for (const auto& c : t.customs) {
            customs.push_back(json{{"id", c.id},
                                   {"label", c.label},
                                   {"line", c.line},
                                   {"ts", c.ts},
                                   {"value", value_to_json(c.val)},
                                   {"parent", c.parent}});
        }
        j["customs"] = std::move(customs);
        return j.dump();
    }

    trace deserialize_trace(std::string_view bytes) {
        json j;
        try {
            j = json::parse(bytes);
        } catch (const nlohmann::json::parse_error& e) {
            throw error(error_code::malformed_trace, std::string("trace is not valid JSON: ") + e.what());
        }
        if (!j.is_object()) throw error(error_code::malformed_trace, "trace must be an object");
        auto version = required<int>(j, "format_version");
        if (version != trace_format_version)
            throw error(error_code::malformed_trace, "unsupported format_version " + std::to_string(version));
        trace t;
        try {
            t.aborted = j.value("aborted", false);
            if (j.contains("spec")) t.spec = spec_from_json(j["spec"]);
            if (j.contains("static_info")) t.statics = static_info_from_json(j["static_info"]);
            if (!j.contains("root")) throw error(error_code::malformed_trace, "missing root block");
            block_from_json(j["root"], std::nullopt, t.blocks);
            for (const auto& b : t.blocks) {
                if (b.id == -1) throw error(error_code::malformed_trace, "block ids are not dense");
            }
            if (j.contains("customs")) {
                for (const auto& c : j["customs"]) {
                    custom_record r;
                    r.id = required<std::int64_t>(c, "id");
                    r.label = required<std::string>(c, "label");
                    r.line = required<int>(c, "line");
                    r.ts = required<timestamp>(c, "ts");
                    r.val = value_from_json(c.at("value"));
                    r.parent = required<block_id>(c, "parent");
                    t.customs.push_back(std::move(r));
                }
            }
        } catch (const error&) {
            throw;
        } catch (const std::exception& e) {
            throw error(error_code::malformed_trace, e.what());
        }
        check_trace_invariants(t);
        return t;
    }

    void write_trace_file(const trace& t, const std::filesystem::path& path) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw error(error_code::sink_io_error, "cannot open " + path.string() + " for writing");
        out << serialize_trace(t);
        if (!out) throw error(error_code::sink_io_error, "failed writing " + path.string());
    }

    trace read_trace_file(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw error(error_code::io_error, "cannot open " + path.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        return deserialize_trace(ss.str());
    }

}  // namespace tracescope
