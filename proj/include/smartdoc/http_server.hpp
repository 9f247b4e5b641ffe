#ifndef SMARTDOC_HTTP_SERVER_HPP
#define SMARTDOC_HTTP_SERVER_HPP

#include <chrono>
#include <cstdio>
#include <functional>
#include <mutex>
#include <ostream>
#include <string>

#include <httplib.h>

#include "api.hpp"

namespace smartdoc::api {

/// Routes every request on `server` through `service`. When `log` is set, writes one line
/// per request: method, path, status, duration.
inline void mount(httplib::Server& server, Service& service, std::ostream* log = nullptr) {
    auto log_mutex = std::make_shared<std::mutex>();
    auto dispatch = [&service, log, log_mutex](const httplib::Request& req, httplib::Response& res) {
        const auto started = std::chrono::steady_clock::now();
        Request request{req.method, req.path, {}, req.body};
        for (const auto& [key, value] : req.params) request.query.emplace(key, value);
        const auto response = service.handle(request);
        res.status = response.status;
        res.set_content(response.body.dump(), std::string(kContentType));
        if (log) {
            const auto micros =
                std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - started).count();
            char ms[32];
            std::snprintf(ms, sizeof ms, "%.3fms", static_cast<double>(micros) / 1000.0);
            std::lock_guard guard(*log_mutex);
            *log << req.method << ' ' << req.path << ' ' << response.status << ' ' << ms << std::endl;
        }
    };
    server.Get(".*", dispatch);
    server.Post(".*", dispatch);
    server.Put(".*", dispatch);
    server.Delete(".*", dispatch);
    server.Patch(".*", dispatch);
}

} // namespace smartdoc::api

#endif // SMARTDOC_HTTP_SERVER_HPP
