#include <doctest.h>

#include <httplib.h>

#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "service_fixtures.hpp"

using namespace salient;
using namespace salient::service;
using namespace service_fixtures;
using nlohmann::json;

namespace {

struct Run {
  int status = -1;
  std::string out;
  std::string err;
};

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Run run(const TempDir& dir, const std::string& args) {
  const auto err_path = dir / "stderr.txt";
  const std::string cmd = std::string(SALIENT_CLI_PATH) + " " + args + " 2>" + err_path.string();
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe);
  char buf[4096];
  for (std::size_t n; (n = fread(buf, 1, sizeof buf, pipe)) > 0;) r.out.append(buf, n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.err = read_file(err_path);
  return r;
}

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

// Config with a small ensemble so the tests stay quick.
std::string setup(const TempDir& dir) {
  std::ofstream(dir / "salient.conf") << "n_trees = 30\ndata_dir = " << (dir / "data").string() << "\n";
  return "--config " + (dir / "salient.conf").string();
}

}  // namespace

TEST_CASE("simulate prints the same report for the same seed") {
  TempDir dir;
  const auto conf = setup(dir);
  const auto a = run(dir, conf + " --json --data-dir " + (dir / "a").string() + " simulate --seed 3 --n 300");
  const auto b = run(dir, conf + " --json --data-dir " + (dir / "b").string() + " simulate --seed 3 --n 300");
  REQUIRE(a.status == 0);
  REQUIRE(b.status == 0);
  CHECK(a.out == b.out);
  CHECK(read_file(dir / "a" / "models" / "auto.json") == read_file(dir / "b" / "models" / "auto.json"));
  const auto j = json::parse(a.out);
  CHECK(j["dataset"]["n"] == 300);
  CHECK(j["learner_capability"]["cv_f1"].contains("random_forest"));

  const auto text = run(dir, conf + " --data-dir " + (dir / "a").string() + " simulate --seed 3 --n 300");
  CHECK(text.status == 0);
  CHECK(text.out.find("dataset: 300 events") == 0);

  const auto other = run(dir, conf + " --data-dir " + (dir / "a").string() + " simulate --seed 4 --n 300");
  CHECK(other.status == 1);
  CHECK(other.err.rfind("error: conflict: ", 0) == 0);
  CHECK(line_count(other.err) == 1);
}

TEST_CASE("ingest, train, feedback and explain") {
  TempDir dir;
  const auto conf = setup(dir);
  const auto ds = dataset(400);
  {
    std::ofstream events(dir / "events.csv");
    write_event_csv(events, labeled_records(ds));
    std::ofstream profiles(dir / "profiles.jsonl");
    write_profiles_jsonl(profiles, ds.profiles);
  }
  const auto ingest = conf + " ingest " + (dir / "events.csv").string() + " --profiles " +
                      (dir / "profiles.jsonl").string();

  auto r = run(dir, conf + " train");
  CHECK(r.status == 3);
  CHECK(r.err.find("no model trained") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(dir / "data" / "models"));

  r = run(dir, ingest);
  REQUIRE(r.status == 0);
  CHECK(r.out.find("events inserted 400, unchanged 0") == 0);
  const auto digest = Store(dir / "data" / "salient.db").digest();
  r = run(dir, ingest);
  CHECK(r.status == 0);
  CHECK(r.out.find("events inserted 0, unchanged 400") == 0);
  CHECK(Store(dir / "data" / "salient.db").digest() == digest);

  r = run(dir, conf + " explain " + ds.events.front().event_id);
  CHECK(r.status == 1);
  CHECK(r.err.rfind("error: no_model: ", 0) == 0);

  r = run(dir, conf + " train");
  REQUIRE(r.status == 0);
  CHECK(r.out.find("manual: rows ") == 0);
  CHECK(r.out.find("cv f1") != std::string::npos);

  const auto& user = ds.events.front().user_id;
  r = run(dir, conf + " --json feedback " + user);
  REQUIRE(r.status == 0);
  const auto fb = json::parse(r.out);
  std::string skipped, shown;
  for (const auto& card : fb["cards"]) {
    CHECK(card["items"].size() <= 3);
    (card["status"] == "omitted" ? skipped : shown) = card["event_id"].get<std::string>();
  }
  REQUIRE_FALSE(skipped.empty());

  r = run(dir, conf + " feedback " + user);
  CHECK(r.status == 0);
  CHECK(r.out.find("user " + user + " week " + fb["week"].get<std::string>()) == 0);
  CHECK(r.out.find(skipped + " [omitted]") != std::string::npos);

  r = run(dir, conf + " explain " + skipped);
  REQUIRE(r.status == 0);
  CHECK(r.out.find("event " + skipped + " decision=Skip confidence manual=") == 0);
  CHECK(line_count(r.out) == 1);

  if (!shown.empty()) {
    r = run(dir, conf + " explain " + shown);
    CHECK(r.out.find("decision=Show") != std::string::npos);
    CHECK(r.out.find("  1. ") != std::string::npos);
  }

  r = run(dir, conf + " --json explain --all-anchors " + skipped);
  REQUIRE(r.status == 0);
  CHECK(!json::parse(r.out)["anchors"]["auto"].is_null());

  r = run(dir, conf + " feedback " + user + " --week 2021-W99");
  CHECK(r.status == 1);
  CHECK(r.err.rfind("error: validation: ", 0) == 0);
}

TEST_CASE("errors are one line on stderr with a nonzero status") {
  TempDir dir;
  const auto conf = setup(dir);
  auto records = labeled_records(dataset(20));
  records[2].rating = 3;
  {
    std::ofstream events(dir / "events.csv");
    write_event_csv(events, records);
  }
  auto r = run(dir, conf + " ingest " + (dir / "events.csv").string());
  CHECK(r.status == 1);
  CHECK(line_count(r.err) == 1);
  CHECK(r.err.find("row 4, column 'rating': rating out of scale −2..+2 (got 3)") != std::string::npos);
  CHECK(r.out.find("events inserted 19") == 0);

  r = run(dir, conf + " explain nope");
  CHECK(r.status == 1);
  CHECK(line_count(r.err) == 1);

  r = run(dir, conf + " ingest " + (dir / "missing.csv").string());
  CHECK(r.status == 1);
  CHECK(r.err.rfind("error: not_found: ", 0) == 0);

  std::ofstream(dir / "bad.conf") << "sugar = 3\n";
  r = run(dir, "--config " + (dir / "bad.conf").string() + " train");
  CHECK(r.status == 1);
  CHECK(r.err.rfind("error: validation: ", 0) == 0);
  CHECK(r.err.find("line 1") != std::string::npos);

  CHECK(run(dir, "").status == 2);
  CHECK(run(dir, "explain").status == 2);
  CHECK(run(dir, "frobnicate").status == 2);
  CHECK(run(dir, "--help").status == 0);
}

TEST_CASE("serve reports its port and answers requests") {
  TempDir dir;
  const auto conf = setup(dir);
  const std::string cmd = "timeout 3 " + std::string(SALIENT_CLI_PATH) + " " + conf + " --json serve --port 0 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe);
  char line[256] = {};
  REQUIRE(fgets(line, sizeof line, pipe));
  const auto j = json::parse(line);
  CHECK(j["models"] == false);
  httplib::Client c("127.0.0.1", j["port"].get<int>());
  const auto r = c.Get("/v1/users/u1/feedback");
  REQUIRE(r);
  CHECK(r->status == 409);
  pclose(pipe);
}
