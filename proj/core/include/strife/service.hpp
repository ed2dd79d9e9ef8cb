#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>

#include "strife/models.hpp"
#include "strife/store.hpp"

namespace strife::service {

struct ServiceOptions {
  /// Bearer token required on every request except GET /health; empty disables auth.
  std::string token;
  /// Passages scored per store transaction while a job runs.
  std::size_t batch_size = 64;
};

/// Reads STRIFE_TOKEN.
ServiceOptions options_from_env();

/// JSON-over-HTTP front end for a CorpusStore. Annotation jobs run one at a
/// time on a private worker thread.
class Service {
 public:
  Service(CorpusStore& store, std::shared_ptr<models::ModelRepository> models, ServiceOptions options = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds and serves on a background thread; port 0 picks a free port.
  /// Returns the bound port.
  int start(const std::string& host, int port);
  /// Binds and serves on the calling thread until stop().
  void run(const std::string& host, int port);
  void stop();

  /// Blocks until the job queue is empty and the worker is idle.
  bool wait_idle(std::chrono::milliseconds timeout = std::chrono::seconds(60));

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Port from STRIFE_PORT, or `fallback`.
int port_from_env(int fallback = 8080);

}  // namespace strife::service
