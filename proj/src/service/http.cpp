#include "salient/service/http.hpp"

#include <httplib.h>

#include <chrono>
#include <mutex>
#include <sstream>

#include <nlohmann/json.hpp>

#include "salient/error.hpp"

namespace salient::service {

namespace {

using nlohmann::json;

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message, json extra = json::object()) {
  extra["error"] = message;
  extra["status"] = status;
  send_json(res, status, extra);
}

json row_errors(const std::vector<RowError>& errors) {
  json out = json::array();
  for (const auto& e : errors) out.push_back({{"row", e.row}, {"column", e.column}, {"message", e.message}});
  return out;
}

json ingest_to_json(const IngestReport& r) {
  return {{"events_inserted", r.events_inserted},     {"events_unchanged", r.events_unchanged},
          {"labels_inserted", r.labels_inserted},     {"profiles_inserted", r.profiles_inserted},
          {"profiles_unchanged", r.profiles_unchanged}, {"rejected", row_errors(r.rejected)},
          {"conflicts", row_errors(r.conflicts)}};
}

std::int64_t now_utc() {
  return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace

struct HttpService::Impl {
  ServiceConfig config;
  Store store;
  httplib::Server server;
  mutable std::mutex models_mu;
  std::shared_ptr<const ModelBundle> bundle;
  std::mutex train_mu;

  explicit Impl(ServiceConfig c) : config(std::move(c)), store(config.data_dir / "salient.db") {
    bundle = load_models(config.data_dir);
    routes();
  }

  std::shared_ptr<const ModelBundle> models() const {
    std::lock_guard lock(models_mu);
    return bundle;
  }

  std::shared_ptr<const ModelBundle> require_models() const {
    auto b = models();
    if (!b) throw ModelUnavailableError("no trained model; POST /v1/train first");
    return b;
  }

  // Runs a handler and maps library errors onto status codes.
  template <class F>
  static void guarded(httplib::Response& res, F&& f) {
    try {
      f();
    } catch (const AnswerOutsideDomainError& e) {
      send_error(res, 422, e.what(), {{"allowed", e.allowed()}});
    } catch (const ValidationError& e) {
      send_error(res, 400, e.what(), {{"violations", e.violations()}});
    } catch (const NotFoundError& e) {
      send_error(res, 404, e.what());
    } catch (const ModelUnavailableError& e) {
      send_error(res, 409, e.what());
    } catch (const ConflictError& e) {
      send_error(res, 409, e.what());
    } catch (const SchemaMismatchError& e) {
      send_error(res, 409, e.what());
    } catch (const json::exception& e) {
      send_error(res, 400, std::string("malformed JSON: ") + e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  }

  void routes() {
    server.Post("/v1/events", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const bool csv = req.get_param_value("format") == "csv" ||
                         req.get_header_value("Content-Type").rfind("text/csv", 0) == 0;
        std::istringstream in(req.body);
        const auto parsed = read_events(in, csv ? RecordFormat::Csv : RecordFormat::JsonLines);
        const auto report = store.ingest(parsed);
        const int status = !report.conflicts.empty() ? 409 : (!report.rejected.empty() ? 400 : 200);
        send_json(res, status, ingest_to_json(report));
      });
    });

    server.Post("/v1/profiles", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        std::istringstream in(req.body);
        const auto profiles = read_profiles_jsonl(in);
        const auto report = store.ingest(ParsedEvents{}, &profiles);
        const int status = !report.conflicts.empty() ? 409 : (!report.rejected.empty() ? 400 : 200);
        send_json(res, status, ingest_to_json(report));
      });
    });

    server.Post("/v1/train", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] {
        std::unique_lock lock(train_mu, std::try_to_lock);
        if (!lock.owns_lock()) throw ConflictError("a training run is already in progress");
        // Training works on a snapshot, so readers keep the store and the
        // current bundle while it runs.
        auto result = train_models(store.snapshot(), config);
        save_models(result, config.data_dir);
        if (result.bundle) {
          std::lock_guard swap(models_mu);
          bundle = result.bundle;
        }
        auto body = report_to_json(result.report);
        body["trained"] = result.report.any_trained();
        send_json(res, 200, body);
      });
    });

    server.Get("/v1/users/:user/feedback", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto b = require_models();
        std::optional<std::string> week;
        if (req.has_param("week")) week = req.get_param_value("week");
        send_json(res, 200,
                  feedback_to_json(weekly_feedback(store, *b, req.path_params.at("user"), week, config.saliency)));
      });
    });

    server.Get("/v1/events/:event/card", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto b = require_models();
        const auto expand = req.get_param_value("expand");
        if (!expand.empty() && expand != "full") throw ValidationError("expand", {"expected expand=full"});
        send_json(res, 200, event_card(store, *b, req.path_params.at("event"), config.saliency, expand == "full"));
      });
    });

    server.Get("/v1/events/:event/explanation", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto b = require_models();
        const bool all = req.get_param_value("anchors") == "all";
        const auto e = explain_stored_event(store, *b, req.path_params.at("event"), config.saliency, all);
        send_json(res, 200, explanation_to_json(e, b->schema));
      });
    });

    server.Post("/v1/elicitations", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto body = json::parse(req.body);
        auto record = body.get<ElicitationRecord>();
        if (!body.contains("received_at")) record.received_at = now_utc();
        const auto b = models();
        const auto seq = record_elicitation(store, b ? b->schema : default_schema(), record);
        send_json(res, 201, {{"seq", seq}, {"elicitation", record}});
      });
    });

    server.Get("/v1/reports/global-shap", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto b = require_models();
        const auto token = req.has_param("mode") ? req.get_param_value("mode") : std::string("manual");
        const auto mode = parse_mode(token);
        if (!mode) throw ValidationError("mode", {"expected manual or auto, got '" + token + "'"});
        std::ostringstream out;
        write_global_shap(out, *b, *mode);
        res.status = 200;
        res.set_content(out.str(), "text/csv");
      });
    });

    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty()) send_error(res, res.status, res.status == 404 ? "no such endpoint" : "request failed");
    });
  }
};

HttpService::HttpService(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

HttpService::~HttpService() = default;

bool HttpService::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

int HttpService::bind_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }

bool HttpService::listen_after_bind() { return impl_->server.listen_after_bind(); }

void HttpService::stop() { impl_->server.stop(); }

bool HttpService::running() const { return impl_->server.is_running(); }

std::shared_ptr<const ModelBundle> HttpService::models() const { return impl_->models(); }

Store& HttpService::store() { return impl_->store; }

}  // namespace salient::service
