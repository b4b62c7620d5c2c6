#include <httplib.h>

#include "evac/exercise_service.hpp"

namespace evac {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code,
                const std::string& message) {
  send_json(res, status, {{"code", code}, {"message", message}});
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw ApiError(400, "bad_json", e.what());
  }
}

template <class F>
httplib::Server::Handler guarded(int ok_status, F fn) {
  return [ok_status, fn](const httplib::Request& req, httplib::Response& res) {
    try {
      send_json(res, ok_status, fn(req));
    } catch (const ApiError& e) {
      send_error(res, e.status(), e.code(), e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "internal", e.what());
    }
  };
}

}  // namespace

void mount_routes(httplib::Server& server, ExerciseService& service,
                  const std::string& static_dir) {
  ExerciseService* svc = &service;
  server.Post("/sessions", guarded(201, [svc](const httplib::Request& req) {
                return svc->create_session(parse_body(req));
              }));
  server.Get(R"(/sessions/([0-9a-f]+))", guarded(200, [svc](const httplib::Request& req) {
               return svc->get_session(req.matches[1]);
             }));
  server.Get(R"(/sessions/([0-9a-f]+)/recommendation)",
             guarded(200, [svc](const httplib::Request& req) {
               return svc->get_recommendation(req.matches[1]);
             }));
  server.Post(R"(/sessions/([0-9a-f]+)/decision)",
              guarded(200, [svc](const httplib::Request& req) {
                return svc->post_decision(req.matches[1], parse_body(req));
              }));
  server.Get(R"(/sessions/([0-9a-f]+)/summary)", guarded(200, [svc](const httplib::Request& req) {
               return svc->get_summary(req.matches[1]);
             }));
  server.Delete(R"(/sessions/([0-9a-f]+))", guarded(200, [svc](const httplib::Request& req) {
                  svc->delete_session(req.matches[1]);
                  return json{{"deleted", true}};
                }));
  if (!static_dir.empty() && !server.set_mount_point("/", static_dir)) {
    throw DomainError("static directory not found: " + static_dir);
  }
}

}  // namespace evac
