#pragma once

// Session-based training exercise: a human plays the gate decision maker on
// a pre-sampled trajectory, may ask the advisor policy for its
// recommendation, and gets a debrief against the advisor's own replay of the
// same trajectory.
//
// The service is transport independent (JSON in, JSON out); http_routes
// binds it to HTTP. True categories of arrivals that have not been decided
// never leave the service while a session is active.

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>

#include "evac/harness.hpp"
#include "evac/table_store.hpp"

namespace httplib {
class Server;
}

namespace evac {

/// Maps to an HTTP status with body {"code", "message"}.
class ApiError : public std::runtime_error {
 public:
  ApiError(int status, std::string code, const std::string& message)
      : std::runtime_error(message), status_(status), code_(std::move(code)) {}
  int status() const { return status_; }
  const std::string& code() const { return code_; }

 private:
  int status_;
  std::string code_;
};

struct ServiceOptions {
  std::chrono::seconds idle_ttl{3600};
};

class ExerciseService {
 public:
  using Clock = std::chrono::steady_clock;

  explicit ExerciseService(std::shared_ptr<const TableStore> tables, ServiceOptions options = {});
  ~ExerciseService();

  /// Request: {"level"?, "advisor"?, "seed"?, "config"?}. Returns
  /// {"session_id", "view"}.
  nlohmann::json create_session(const nlohmann::json& request);
  nlohmann::json get_session(const std::string& id);
  nlohmann::json get_recommendation(const std::string& id);
  /// Body: {"action": "ACCEPT"|"REJECT", "cursor"?}. A stale cursor is a 409.
  nlohmann::json post_decision(const std::string& id, const nlohmann::json& body);
  nlohmann::json get_summary(const std::string& id);
  void delete_session(const std::string& id);

  /// Drops sessions idle for longer than the TTL as of `now`.
  std::size_t purge_expired(Clock::time_point now);
  std::size_t session_count() const;

 private:
  struct Session;
  std::shared_ptr<Session> find(const std::string& id);
  std::string new_id();
  static nlohmann::json summary_of(Session& s);  // caller holds s.mu

  std::shared_ptr<const TableStore> tables_;
  ServiceOptions options_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  Rng id_rng_;
};

/// Registers the JSON endpoints; serves `static_dir` at "/" when non-empty.
void mount_routes(httplib::Server& server, ExerciseService& service,
                  const std::string& static_dir = "");

}  // namespace evac
