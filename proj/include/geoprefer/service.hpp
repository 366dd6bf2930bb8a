#ifndef GEOPREFER_SERVICE_HPP
#define GEOPREFER_SERVICE_HPP

#include <chrono>
#include <memory>
#include <string>

#include "geoprefer/girtree.hpp"
#include "geoprefer/session.hpp"

namespace geoprefer {

struct ServiceConfig {
  std::chrono::seconds idle_ttl{30 * 60};
  TerminationConfig termination;
  EstimatorConfig estimator;
  std::uint64_t seed = 0;  // per-session seeds derive from this and a counter
  std::size_t default_k = 20;
  std::size_t default_theta = 8;
  double default_lambda = 0.5;
  Strategy default_strategy = Strategy::DensestGraph;
};

/// HTTP/JSON session API over one loaded index.
///
///   POST /sessions                {lat, lon, words, k?, theta?, lambda?, strategy?, seed?}
///   POST /sessions/{id}/feedback  {chosen_id}
///   POST /sessions/{id}/stop
///   GET  /sessions/{id}
///   GET  /objects/{id}
///   GET  /healthz
///
/// Errors are {"error": message} with 404 (unknown session/object), 409
/// (session terminated, or another request on the same session still in
/// flight) and 422 (invalid body; the message names the field). Concurrent
/// requests on one session are not queued: the loser gets 409.
class Service {
 public:
  explicit Service(std::shared_ptr<const GirTree> tree, ServiceConfig cfg = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds and blocks serving until stop(). False when binding fails.
  bool listen(const std::string& host, int port);
  /// Binds to an OS-chosen port and returns it (-1 on failure).
  int bind_to_any_port(const std::string& host);
  /// Serves on a socket bound by bind_to_any_port until stop().
  bool listen_after_bind();
  void wait_until_ready() const;
  void stop();

  std::size_t session_count() const;
  /// Drops sessions idle for longer than the TTL; returns how many.
  std::size_t expire_idle();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace geoprefer

#endif  // GEOPREFER_SERVICE_HPP
