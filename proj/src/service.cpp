#include "locpred/service.hpp"

#include <httplib.h>

namespace locpred::service {

namespace {

Response error_response(int status, const std::string& message) {
  return {status, nlohmann::json{{"error", message}}.dump(), "application/json"};
}

}  // namespace

Response handle_predict(const bundle::ModelBundle& b, std::string_view body) {
  if (body.find_first_not_of(" \t\r\n") == std::string_view::npos)
    return error_response(400, "empty request body; expected FASTA");
  std::vector<data::SequenceRecord> records;
  Diagnostics diag;
  try {
    records = data::parse_fasta(body, &diag);
  } catch (const FormatError& e) {
    return error_response(400, std::string("malformed FASTA: ") + e.what());
  }
  if (records.empty()) {
    std::string why = "no usable FASTA records";
    for (const auto& w : diag.warnings) why += "; " + w;
    return error_response(400, why);
  }
  return {200, bundle::to_json(bundle::predict_records(b, records)).dump(), "application/json"};
}

Response handle_health(const bundle::ModelBundle& b) {
  nlohmann::json j = {{"status", "ok"},
                      {"schema_id", b.model.schema_id},
                      {"vocabulary", b.model.vocabulary.labels()},
                      {"selected_features", b.model.feature_indices.size()}};
  return {200, j.dump(), "application/json"};
}

struct Server::Impl {
  std::shared_ptr<const bundle::ModelBundle> bundle;
  httplib::Server http;
};

Server::Server(std::shared_ptr<const bundle::ModelBundle> b) : impl_(std::make_unique<Impl>()) {
  if (!b) throw DomainError("server needs a bundle");
  impl_->bundle = std::move(b);
  auto* impl = impl_.get();
  auto reply = [](httplib::Response& res, const Response& r) {
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  impl_->http.Post("/predict", [impl, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, handle_predict(*impl->bundle, req.body));
  });
  impl_->http.Get("/health", [impl, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, handle_health(*impl->bundle));
  });
}

Server::~Server() { stop(); }

int Server::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->http.bind_to_any_port(host);
    if (bound < 0) throw Error("cannot bind " + host);
    return bound;
  }
  if (!impl_->http.bind_to_port(host, port))
    throw Error("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void Server::listen() {
  if (!impl_->http.listen_after_bind()) throw Error("HTTP server stopped unexpectedly");
}

void Server::stop() {
  if (impl_ && impl_->http.is_running()) impl_->http.stop();
}

}  // namespace locpred::service
