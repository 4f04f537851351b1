#pragma once

// JSON HTTP API.
//
//   POST /v1/events                      CSV (text/csv) or JSON lines body
//   POST /v1/profiles                    JSON lines body
//   POST /v1/train
//   GET  /v1/users/{u}/feedback?week=    weekly cards, omitted stubs included
//   GET  /v1/events/{e}/card?expand=full
//   GET  /v1/events/{e}/explanation?anchors=all
//   POST /v1/elicitations
//   GET  /v1/reports/global-shap?mode=   CSV
//
// Errors are {"error": ..., "status": ...} with 400 (malformed), 404
// (unknown id), 409 (no model, conflicting row, training busy) or 422
// (answer outside the feature domain, with "allowed" listing the choices).
//
// Models are held behind a shared pointer: a request keeps the bundle it
// started with, and a finished training run swaps in the new bundle whole.

#include <memory>
#include <string>

#include "salient/service/config.hpp"
#include "salient/service/pipeline.hpp"
#include "salient/service/store.hpp"

namespace salient::service {

class HttpService {
 public:
  // Opens the store under config.data_dir and loads any saved models.
  explicit HttpService(ServiceConfig config);
  ~HttpService();
  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  // Blocks until stop(). Returns false when the address cannot be bound.
  bool listen(const std::string& host, int port);
  // Binds an ephemeral port and returns it (or -1); serve with listen_after_bind().
  int bind_any_port(const std::string& host);
  bool listen_after_bind();
  void stop();
  bool running() const;

  std::shared_ptr<const ModelBundle> models() const;
  Store& store();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace salient::service
