#include "tracescope/service/http_api.hpp"

#include <httplib.h>

#include <charconv>

namespace tracescope::service {

    using json = nlohmann::ordered_json;

    int http_status(error_code code) {
        switch (code) {
            case error_code::parse_error:
            case error_code::invalid_argument:
            case error_code::invalid_spec: return 400;
            case error_code::unknown_session:
            case error_code::unknown_block:
            case error_code::unknown_name:
            case error_code::unknown_variable: return 404;
            case error_code::timeout: return 408;
            case error_code::invalid_state: return 409;
            case error_code::trace_too_large: return 413;
            case error_code::unsupported_construct:
            case error_code::unresolvable_target:
            case error_code::duplicate_target:
            case error_code::incompatible:
            case error_code::too_many_groups:
            case error_code::not_admissible:
            case error_code::not_a_tracked_block:
            case error_code::subject_crash:
            case error_code::thread_violation: return 422;
            case error_code::emit_error:
            case error_code::malformed_trace:
            case error_code::stack_mismatch:
            case error_code::sink_io_error:
            case error_code::schema_violation:
            case error_code::io_error: return 500;
        }
        return 500;
    }

    namespace {

        void send(httplib::Response& res, const json& body, int status = 200) {
            res.status = status;
            res.set_content(body.dump(), "application/json");
        }

        void send_error(httplib::Response& res, error_code code, const std::string& message) {
            send(res, {{"error", {{"code", to_string(code)}, {"message", message}}}}, http_status(code));
        }

        json body_of(const httplib::Request& req) {
            if (req.body.empty()) return json::object();
            try {
                return json::parse(req.body);
            } catch (const nlohmann::json::exception& e) {
                throw error(error_code::invalid_argument, std::string("request body is not JSON: ") + e.what());
            }
        }

        std::int64_t parse_int(const std::string& text, const char* what) {
            std::int64_t v = 0;
            auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
            if (ec != std::errc() || end != text.data() + text.size())
                throw error(error_code::invalid_argument, std::string(what) + " must be an integer, got '" + text + "'");
            return v;
        }

        std::optional<std::int64_t> int_param(const httplib::Request& req, const char* key) {
            if (!req.has_param(key)) return std::nullopt;
            return parse_int(req.get_param_value(key), key);
        }

        using handler = std::function<void(const httplib::Request&, httplib::Response&)>;

        // Maps module errors to JSON error payloads with their stable codes.
        handler guarded(handler h) {
            return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
                try {
                    h(req, res);
                } catch (const error& e) {
                    send_error(res, e.code(), e.what());
                } catch (const std::exception& e) {
                    send_error(res, error_code::io_error, e.what());
                }
            };
        }

        std::string route(const std::string& tail) { return std::string(api_prefix) + tail; }

    }  // namespace

    struct http_api::impl {
        session_manager& sessions;
        httplib::Server server;
        bool bound{false};

        explicit impl(session_manager& s) : sessions(s) { routes(); }

        void routes() {
            auto& sv = server;
            sv.Get(route("/health"), guarded([](const httplib::Request&, httplib::Response& res) { send(res, {{"ok", true}}); }));
            sv.Get(route("/config"),
                   guarded([this](const httplib::Request&, httplib::Response& res) { send(res, config_to_json(sessions.config())); }));

            sv.Post(route("/sessions"), guarded([this](const httplib::Request& req, httplib::Response& res) {
                        auto id = sessions.create_session(bundle_from_json(body_of(req)));
                        send(res, info_to_json(sessions.info(id)), 201);
                    }));
            sv.Get(route("/sessions"),
                   guarded([this](const httplib::Request&, httplib::Response& res) { send(res, {{"sessions", sessions.list_sessions()}}); }));
            sv.Get(route(R"(/sessions/([^/]+))"), guarded([this](const httplib::Request& req, httplib::Response& res) {
                       send(res, info_to_json(sessions.info(req.matches[1])));
                   }));
            sv.Delete(route(R"(/sessions/([^/]+))"), guarded([this](const httplib::Request& req, httplib::Response& res) {
                          sessions.delete_session(req.matches[1]);
                          send(res, {{"deleted", std::string(req.matches[1])}});
                      }));

            sv.Put(route(R"(/sessions/([^/]+)/spec)"), guarded([this](const httplib::Request& req, httplib::Response& res) {
                       auto [spec, version] = sessions.update_spec(req.matches[1], spec_from_json(body_of(req)));
                       send(res, {{"version", version}, {"spec", spec_to_json(spec)}});
                   }));
            sv.Put(route(R"(/sessions/([^/]+)/source)"), guarded([this](const httplib::Request& req, httplib::Response& res) {
                       auto body = body_of(req);
                       std::string file, text;
                       try {
                           file = body.at("file").get<std::string>();
                           text = body.at("text").get<std::string>();
                       } catch (const nlohmann::json::exception& e) {
                           throw error(error_code::invalid_argument, std::string("source edit needs file and text: ") + e.what());
                       }
                       auto dropped = sessions.update_source(req.matches[1], file, text);
                       auto info = sessions.info(req.matches[1]);
                       send(res, {{"version", info.version}, {"dropped", dropped}, {"spec", spec_to_json(info.spec)}});
                   }));
            sv.Post(route(R"(/sessions/([^/]+)/trace)"), guarded([this](const httplib::Request& req, httplib::Response& res) {
                        send(res, outcome_to_json(sessions.run_trace(req.matches[1])));
                    }));

            sv.Get(route(R"(/sessions/([^/]+)/tree)"), guarded([this](const httplib::Request& req, httplib::Response& res) {
                       auto root = int_param(req, "root");
                       auto depth = int_param(req, "depth");
                       if (depth && (*depth < 0 || *depth > 1'000'000))
                           throw error(error_code::invalid_argument, "depth is out of range");
                       auto w = sessions.get_tree(req.matches[1], root,
                                                  depth ? std::optional<int>(static_cast<int>(*depth)) : std::nullopt);
                       send(res, tree_to_json(w));
                   }));
            auto plot = guarded([this](const httplib::Request& req, httplib::Response& res) {
                json q = req.has_param("q") ? json::parse(req.get_param_value("q"), nullptr, false) : body_of(req);
                if (q.is_discarded()) throw error(error_code::invalid_argument, "q is not JSON");
                send(res, store::plot_to_json(sessions.get_plot(req.matches[1], store::plot_query_from_json(q))));
            });
            sv.Get(route(R"(/sessions/([^/]+)/plot)"), plot);
            sv.Post(route(R"(/sessions/([^/]+)/plot)"), plot);
            auto values = guarded([this](const httplib::Request& req, httplib::Response& res) {
                if (!req.has_param("name")) throw error(error_code::invalid_argument, "values needs ?name=");
                auto body = body_of(req);
                auto filter = body.empty() ? store::value_filter{} : store::filter_from_json(body);
                json rows = json::array();
                for (const auto& r : sessions.values(req.matches[1], req.get_param_value("name"), filter))
                    rows.push_back(store::row_to_json(r));
                send(res, {{"rows", rows}});
            });
            sv.Get(route(R"(/sessions/([^/]+)/values)"), values);
            sv.Post(route(R"(/sessions/([^/]+)/values)"), values);
            sv.Get(route(R"(/sessions/([^/]+)/deps/([^/]+))"), guarded([this](const httplib::Request& req, httplib::Response& res) {
                       send(res, deps_to_json(sessions.get_deps(req.matches[1], parse_int(req.matches[2], "block"))));
                   }));
            sv.Get(route(R"(/sessions/([^/]+)/span/([^/]+))"), guarded([this](const httplib::Request& req, httplib::Response& res) {
                       send(res, span_result_to_json(
                                         sessions.get_source_span(req.matches[1], parse_int(req.matches[2], "block"))));
                   }));
            sv.Get(route(R"(/sessions/([^/]+)/trackables)"), guarded([this](const httplib::Request& req, httplib::Response& res) {
                       send(res, {{"trackables", trackables_to_json(sessions.list_trackables(req.matches[1]))}});
                   }));
            sv.Get(route(R"(/sessions/([^/]+)/names)"), guarded([this](const httplib::Request& req, httplib::Response& res) {
                       send(res, {{"names", sessions.names(req.matches[1])}});
                   }));

            sv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
                if (res.status == 404 && res.body.empty())
                    send(res, {{"error", {{"code", "NotFound"}, {"message", "no such route"}}}}, 404);
            });
        }
    };

    http_api::http_api(session_manager& sessions) : p_(std::make_unique<impl>(sessions)) {}
    http_api::~http_api() { stop(); }

    int http_api::bind(const std::string& host, int port) {
        if (port == 0) {
            int bound = p_->server.bind_to_any_port(host);
            if (bound <= 0) throw error(error_code::io_error, "cannot bind to " + host);
            p_->bound = true;
            return bound;
        }
        if (!p_->server.bind_to_port(host, port))
            throw error(error_code::io_error, "cannot bind to " + host + ":" + std::to_string(port));
        p_->bound = true;
        return port;
    }

    void http_api::serve() {
        if (!p_->bound) throw error(error_code::invalid_state, "bind before serving");
        p_->server.listen_after_bind();
    }

    void http_api::stop() {
        if (p_->server.is_running()) p_->server.stop();
    }

}  // namespace tracescope::service
