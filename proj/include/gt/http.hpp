#pragma once
// HTTP binding of SessionService under /v1.

#include <string>

#include "httplib.h"

#include "gt/session.hpp"

namespace gt {

inline void send(httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    if (r.status != 204) res.set_content(r.body.dump(), "application/json");
}

inline void register_routes(httplib::Server& server, SessionService& service) {
    server.Post("/v1/sessions", [&service](const httplib::Request& req, httplib::Response& res) {
        send(res, service.create(req.body));
    });
    server.Get(R"(/v1/sessions/([^/]+)/recommendation)",
               [&service](const httplib::Request& req, httplib::Response& res) {
                   send(res, service.recommendation(req.matches[1]));
               });
    server.Post(R"(/v1/sessions/([^/]+)/results)",
                [&service](const httplib::Request& req, httplib::Response& res) {
                    send(res, service.post_result(req.matches[1], req.body));
                });
    server.Get(R"(/v1/sessions/([^/]+)/state)",
               [&service](const httplib::Request& req, httplib::Response& res) {
                   send(res, service.state(req.matches[1]));
               });
    server.Delete(R"(/v1/sessions/([^/]+))",
                  [&service](const httplib::Request& req, httplib::Response& res) {
                      send(res, service.remove(req.matches[1]));
                  });
    // Browser clients are served from a different origin.
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    server.Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.status = 204;
    });
}

}  // namespace gt
