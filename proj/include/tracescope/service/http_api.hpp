#pragma once

#include "tracescope/error.hpp"
#include "tracescope/service/session.hpp"

#include <memory>
#include <string>

namespace tracescope::service {

    inline constexpr std::string_view api_prefix = "/api/v1";

    // HTTP status reported for each error code.
    int http_status(error_code code);

    /// JSON over HTTP front of a session_manager. Routes live under /api/v1.
    class http_api {
    public:
        explicit http_api(session_manager& sessions);
        ~http_api();
        http_api(const http_api&) = delete;
        http_api& operator=(const http_api&) = delete;

        // Binds to `port`, or to a free port when it is 0. Returns the bound port.
        int bind(const std::string& host, int port);
        // Serves until stop() is called. Requires a successful bind().
        void serve();
        void stop();

    private:
        struct impl;
        std::unique_ptr<impl> p_;
    };

}  // namespace tracescope::service
