#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "triage/session.hpp"

namespace triage {

struct ServiceOptions {
  std::string cors_origin = "*";
  std::optional<std::filesystem::path> snapshot_dir;
};

// HTTP/JSON front end over a SessionStore.
//
//   POST /v1/sessions                       create (builtin case or document)
//   GET  /v1/sessions/{id}                  session view
//   POST /v1/sessions/{id}/observations     {"component", "health"}
//   GET  /v1/sessions/{id}/recommendations  ?override=M1:0.79,P:0.95
//   POST /v1/sessions/{id}/actions          {"component", "action": {"edge"|"commit"}}
//   POST /v1/sessions/{id}/undo
//   GET  /v1/sessions/{id}/history
//   GET  /v1/health
//
// Errors are {"code", "message", "reason_code"?}.
class Service {
 public:
  explicit Service(ServiceOptions options = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Blocks until stop(). Returns false if the port cannot be bound.
  bool listen(const std::string& host, int port);
  // Binds an ephemeral port and serves from a background thread. Returns
  // the port, or -1 on failure.
  int start_background(const std::string& host = "127.0.0.1");
  void stop();

  SessionStore& store();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace triage
