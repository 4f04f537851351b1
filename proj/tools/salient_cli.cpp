// salient: batch front end for ingestion, training, explanation, feedback,
// simulation and the HTTP service.
//
// Exit status: 0 success, 1 failure (one "error: <kind>: <message>" line on
// stderr), 2 usage error, 3 nothing to do (train with too few labels).

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "salient/error.hpp"
#include "salient/feedback.hpp"
#include "salient/service/config.hpp"
#include "salient/service/http.hpp"
#include "salient/service/pipeline.hpp"
#include "salient/service/records.hpp"
#include "salient/service/store.hpp"

using namespace salient;
using namespace salient::service;
using nlohmann::json;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNoop = 3;

struct Globals {
  std::string config_file;
  std::string data_dir;
  std::optional<std::uint64_t> seed;
  bool json = false;
};

ServiceConfig resolve(const Globals& g) {
  ServiceConfig c = g.config_file.empty() ? ServiceConfig{} : load_config(g.config_file);
  if (!g.data_dir.empty()) c.data_dir = g.data_dir;
  if (g.seed) c.seed = *g.seed;
  c.validate();
  return c;
}

std::filesystem::path db_path(const ServiceConfig& c) { return c.data_dir / "salient.db"; }

std::shared_ptr<const ModelBundle> require_models(const ServiceConfig& c) {
  auto b = load_models(c.data_dir);
  if (!b) throw ModelUnavailableError("no trained model in " + c.data_dir.string() + "; run 'salient train' first");
  return b;
}

// Failure lines stay on one line whatever the message holds.
std::string one_line(std::string s) {
  for (auto& ch : s) {
    if (ch == '\n' || ch == '\r') ch = ' ';
  }
  return s;
}

int fail(const char* kind, const std::string& message) {
  std::cerr << "error: " << kind << ": " << one_line(message) << '\n';
  return kExitFailure;
}

void print_json(const json& j) { std::cout << j.dump(2) << '\n'; }

std::string fixed(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

json ingest_json(const IngestReport& r) {
  auto rows = [](const std::vector<RowError>& errors) {
    json out = json::array();
    for (const auto& e : errors) out.push_back({{"row", e.row}, {"column", e.column}, {"message", e.message}});
    return out;
  };
  return {{"events_inserted", r.events_inserted},     {"events_unchanged", r.events_unchanged},
          {"labels_inserted", r.labels_inserted},     {"profiles_inserted", r.profiles_inserted},
          {"profiles_unchanged", r.profiles_unchanged}, {"rejected", rows(r.rejected)},
          {"conflicts", rows(r.conflicts)}};
}

int run_ingest(const Globals& g, const std::string& events_file, const std::string& profiles_file) {
  const auto cfg = resolve(g);
  if (events_file.empty() && profiles_file.empty()) throw ValidationError("ingest", {"nothing to ingest"});
  ParsedEvents events;
  if (!events_file.empty()) events = read_events(events_file);
  std::optional<ParsedProfiles> profiles;
  if (!profiles_file.empty()) {
    std::ifstream in(profiles_file);
    if (!in) throw NotFoundError("cannot open " + profiles_file);
    profiles = read_profiles_jsonl(in);
  }
  Store store(db_path(cfg));
  const auto report = store.ingest(events, profiles ? &*profiles : nullptr);
  if (g.json) {
    print_json(ingest_json(report));
  } else {
    std::cout << "events inserted " << report.events_inserted << ", unchanged " << report.events_unchanged
              << "; labels inserted " << report.labels_inserted << "; profiles inserted "
              << report.profiles_inserted << ", unchanged " << report.profiles_unchanged << '\n';
    for (const auto& e : report.rejected) std::cout << "rejected " << e.to_string() << '\n';
    for (const auto& e : report.conflicts) std::cout << "conflict " << e.to_string() << '\n';
  }
  if (!report.conflicts.empty()) {
    return fail("conflict", std::to_string(report.conflicts.size()) + " row(s) conflict with stored data, first: " +
                                report.conflicts.front().to_string());
  }
  if (!report.rejected.empty()) {
    return fail("validation", std::to_string(report.rejected.size()) + " row(s) rejected, first: " +
                                  report.rejected.front().to_string());
  }
  return 0;
}

int run_train(const Globals& g) {
  const auto cfg = resolve(g);
  Store store(db_path(cfg));
  const auto result = train_models(store.snapshot(), cfg);
  save_models(result, cfg.data_dir);
  const auto& r = result.report;
  if (g.json) {
    auto j = report_to_json(r);
    j["trained"] = r.any_trained();
    print_json(j);
  } else {
    for (const auto& m : r.modes) {
      std::cout << to_token(m.mode) << ": rows " << m.rows << ", positives " << m.positives;
      if (m.trained) {
        const auto& cv = m.cv.at("gbt").pooled;
        std::cout << ", cv f1 " << fixed(cv.f1) << ", accuracy " << fixed(cv.accuracy);
      } else {
        std::cout << ", skipped (" << *m.skipped << ")";
      }
      std::cout << '\n';
    }
  }
  for (const auto& w : r.warnings) std::cerr << "warning: " << one_line(w) << '\n';
  if (!r.any_trained()) {
    std::cerr << "notice: no model trained\n";
    return kExitNoop;
  }
  return 0;
}

int run_explain(const Globals& g, const std::string& event_id, bool all_anchors) {
  const auto cfg = resolve(g);
  const auto bundle = require_models(cfg);
  Store store(db_path(cfg));
  const auto e = explain_stored_event(store, *bundle, event_id, cfg.saliency, all_anchors);
  if (g.json) {
    print_json(explanation_to_json(e, bundle->schema));
    return 0;
  }
  const auto& r = e.report;
  const auto decision = r.decision == Decision::Show ? "Show" : "Skip";
  std::cout << "event " << event_id << " decision=" << decision << " confidence manual="
            << fixed(r.confidence[0]) << " auto=" << fixed(r.confidence[1]) << '\n';
  for (std::size_t i = 0; i < r.selected.size(); ++i) {
    const auto& s = r.selected[i];
    std::cout << "  " << i + 1 << ". " << bundle->schema[s.feature].name << " mode=" << to_token(s.mode)
              << " weight=" << fixed(s.weight, 4) << '\n';
  }
  for (auto mode : kAllModes) {
    if (const auto& a = e.anchors[static_cast<std::size_t>(mode)]) {
      std::string text;
      for (const auto& p : anchor_to_json(*a, bundle->schema)["predicates"]) {
        text += (text.empty() ? "" : " AND ") + p["text"].get<std::string>();
      }
      std::cout << "  anchor " << to_token(mode) << ": " << (text.empty() ? "(always)" : text) << " (precision "
                << fixed(a->precision) << (a->proven ? ")" : ", below tau)") << '\n';
    }
  }
  return 0;
}

int run_feedback(const Globals& g, const std::string& user, const std::string& week) {
  const auto cfg = resolve(g);
  const auto bundle = require_models(cfg);
  Store store(db_path(cfg));
  const auto f = weekly_feedback(store, *bundle, user, week.empty() ? std::nullopt : std::optional(week), cfg.saliency);
  if (g.json) {
    print_json(feedback_to_json(f));
    return 0;
  }
  std::cout << "user " << f.user_id << " week " << f.week << ": " << f.cards.size() << " meal(s)\n";
  for (const auto& card : f.cards) {
    std::cout << card.event_id << " [" << to_token(card.status) << "]\n";
    if (card.stub) std::cout << "  " << *card.stub << '\n';
    for (const auto& line : render_text(card)) std::cout << "  - " << line << '\n';
  }
  return 0;
}

int run_simulate(const Globals& g, const SimulateOptions& options) {
  const auto cfg = resolve(g);
  const auto j = simulate(cfg, options);
  if (g.json) {
    print_json(j);
    return 0;
  }
  const auto& d = j["dataset"];
  std::cout << "dataset: " << d["n"] << " events, " << d["users"] << " users, noise " << d["noise"]
            << ", positive rate " << fixed(d["positive_rate"].get<double>()) << '\n';
  for (const auto& [mode, m] : j["train"]["modes"].items()) {
    std::cout << mode << ": rows " << m["rows"];
    if (m["trained"].get<bool>()) {
      std::cout << ", cv f1 " << fixed(m["cv"]["gbt"]["pooled"]["f1"].get<double>());
    }
    std::cout << '\n';
  }
  const auto& lc = j["learner_capability"];
  std::cout << "learner capability (pooled 5-fold f1):";
  for (const auto& [kind, v] : lc["cv_f1"].items()) std::cout << ' ' << kind << ' ' << fixed(v.get<double>(), 4);
  std::cout << "\ngbt f1 >= 0.85: " << (lc["gbt_f1_at_least_0_85"].get<bool>() ? "yes" : "no")
            << ", gbt >= baselines: " << (lc["gbt_at_least_baselines"].get<bool>() ? "yes" : "no") << '\n';
  return 0;
}

int run_serve(const Globals& g, const std::string& host, int port) {
  auto cfg = resolve(g);
  if (!host.empty()) cfg.host = host;
  if (port >= 0) cfg.port = port;
  HttpService service(cfg);
  // Port 0 picks a free port, reported below.
  const int bound = cfg.port == 0 ? service.bind_any_port(cfg.host) : cfg.port;
  if (bound < 0) return fail("error", "cannot bind " + cfg.host + ":0");
  const bool models = service.models() != nullptr;
  if (g.json) {
    std::cout << json{{"host", cfg.host}, {"port", bound}, {"models", models}}.dump() << std::endl;
  } else {
    std::cerr << "serving on http://" << cfg.host << ':' << bound << (models ? "" : " (no model yet)") << std::endl;
  }
  const bool ok = cfg.port == 0 ? service.listen_after_bind() : service.listen(cfg.host, cfg.port);
  if (!ok) return fail("error", "cannot bind " + cfg.host + ":" + std::to_string(cfg.port));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Salient feedback engine for meal self-tracking"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_file, "key = value configuration file")->check(CLI::ExistingFile);
  app.add_option("--data-dir", g.data_dir, "store and model directory (overrides the config)");
  app.add_option("--seed", g.seed, "training seed (overrides the config)");
  app.add_flag("--json", g.json, "machine-readable output");

  std::string events_file, profiles_file;
  auto* ingest = app.add_subcommand("ingest", "store events (CSV or JSON lines) and profiles (JSON lines)");
  ingest->add_option("events", events_file, "event file; .csv or JSON lines");
  ingest->add_option("--profiles", profiles_file, "profile file, one JSON object per line");

  auto* train = app.add_subcommand("train", "train per-mode models and write the CV report");

  std::string event_id;
  bool all_anchors = false;
  auto* explain = app.add_subcommand("explain", "when/which/why/how decision for one stored event");
  explain->add_option("event", event_id, "event id")->required();
  explain->add_flag("--all-anchors", all_anchors, "compute anchors for both modes");

  std::string user, week;
  auto* feedback = app.add_subcommand("feedback", "weekly feedback cards for a user");
  feedback->add_option("user", user, "user id")->required();
  feedback->add_option("--week", week, "ISO week, e.g. 2021-W09 (default: latest)");

  SimulateOptions sim;
  auto* simulate_cmd = app.add_subcommand("simulate", "run the planted-rule dataset through the pipeline");
  simulate_cmd->add_option("--seed", sim.seed, "dataset seed");
  simulate_cmd->add_option("--n", sim.n, "number of events")->check(CLI::PositiveNumber);
  simulate_cmd->add_option("--noise", sim.noise, "label noise rate")->check(CLI::Range(0.0, 0.499));

  std::string host;
  int port = -1;
  auto* serve = app.add_subcommand("serve", "start the HTTP API");
  serve->add_option("--host", host, "bind address");
  serve->add_option("--port", port, "port")->check(CLI::Range(0, 65535));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*ingest) return run_ingest(g, events_file, profiles_file);
    if (*train) return run_train(g);
    if (*explain) return run_explain(g, event_id, all_anchors);
    if (*feedback) return run_feedback(g, user, week);
    if (*simulate_cmd) return run_simulate(g, sim);
    if (*serve) return run_serve(g, host, port);
  } catch (const AnswerOutsideDomainError& e) {
    return fail("validation", e.what());
  } catch (const ValidationError& e) {
    return fail("validation", e.what());
  } catch (const NotFoundError& e) {
    return fail("not_found", e.what());
  } catch (const ModelUnavailableError& e) {
    return fail("no_model", e.what());
  } catch (const ConflictError& e) {
    return fail("conflict", e.what());
  } catch (const SchemaMismatchError& e) {
    return fail("schema", e.what());
  } catch (const std::exception& e) {
    return fail("error", e.what());
  }
  return kExitFailure;
}
