#ifndef LOCPRED_SERVICE_HPP
#define LOCPRED_SERVICE_HPP

#include "locpred/bundle.hpp"

#include <memory>
#include <string>
#include <string_view>

namespace locpred::service {

struct Response {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

/// POST /predict: FASTA in, JSON array of {id, labels, scores} out. An empty
/// or malformed body is a 400; records too short for the schema get a
/// per-record error entry.
Response handle_predict(const bundle::ModelBundle& bundle, std::string_view body);

/// GET /health: schema_id, vocabulary and selected dimension.
Response handle_health(const bundle::ModelBundle& bundle);

/// Read-only HTTP front end over a loaded bundle.
class Server {
 public:
  explicit Server(std::shared_ptr<const bundle::ModelBundle> bundle);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop() is called.
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace locpred::service

#endif  // LOCPRED_SERVICE_HPP
