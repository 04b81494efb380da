#pragma once

// JSON control API over a Workspace. Routes:
//   GET  /projects                              POST /projects
//   GET  /projects/{id}
//   POST /projects/{id}/stages/{S1..S5}/run     POST /projects/{id}/rollback
//   GET  /projects/{id}/terms?status=           POST /projects/{id}/terms/{tid}/decision
//   GET  /projects/{id}/ontology                POST /projects/{id}/ontology/concepts
//   PATCH /projects/{id}/ontology/concepts/{cid}
//   POST /projects/{id}/ontology/merge          GET  /projects/{id}/search?q=&k=
//   GET  /library
// Mutations accept an expected version (If-Match header or "version" body
// field) and answer 409 when it is stale. Static files under /ui when a UI
// directory is given.

#include <filesystem>
#include <memory>
#include <string>

#include "ikon/error.hpp"
#include "ikon/workspace.hpp"

namespace ikon::api {

/// HTTP status for a library error code.
int http_status(ErrorCode code);

class Server {
 public:
  explicit Server(pipeline::Workspace& workspace, std::filesystem::path ui_dir = {});
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds (port 0 picks a free one) and returns the bound port, or -1.
  int bind(const std::string& host, int port);
  /// Blocks serving requests until stop().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace ikon::api
