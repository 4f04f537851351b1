#include "salient/service/store.hpp"

#include <sqlite3.h>

#include <cstdio>
#include <mutex>

#include <nlohmann/json.hpp>

#include "salient/error.hpp"

namespace salient::service {

namespace {

using nlohmann::json;

class Statement {
 public:
  Statement(sqlite3* db, const char* sql) : db_(db) {
    if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK) {
      throw Error(std::string("store: ") + sqlite3_errmsg(db));
    }
  }
  ~Statement() { sqlite3_finalize(stmt_); }
  Statement(const Statement&) = delete;
  Statement& operator=(const Statement&) = delete;

  Statement& bind(int i, const std::string& v) {
    sqlite3_bind_text(stmt_, i, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT);
    return *this;
  }
  Statement& bind(int i, std::int64_t v) {
    sqlite3_bind_int64(stmt_, i, v);
    return *this;
  }

  // True while a row is available.
  bool step() {
    const int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    throw Error(std::string("store: ") + sqlite3_errmsg(db_));
  }

  std::string text(int col) const {
    const auto* p = sqlite3_column_text(stmt_, col);
    return p ? std::string(reinterpret_cast<const char*>(p), static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col)))
             : std::string();
  }
  std::int64_t integer(int col) const { return sqlite3_column_int64(stmt_, col); }

 private:
  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
};

void exec(sqlite3* db, const char* sql) {
  char* err = nullptr;
  if (sqlite3_exec(db, sql, nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "unknown error";
    sqlite3_free(err);
    throw Error("store: " + msg);
  }
}

constexpr const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS meta (key TEXT PRIMARY KEY, value TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS events (
  event_id TEXT PRIMARY KEY,
  user_id TEXT NOT NULL,
  ts INTEGER NOT NULL,
  payload TEXT NOT NULL
);
CREATE INDEX IF NOT EXISTS events_by_user ON events (user_id, ts, event_id);
CREATE TABLE IF NOT EXISTS profiles (user_id TEXT PRIMARY KEY, payload TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS labels (
  event_id TEXT NOT NULL,
  mode TEXT NOT NULL,
  rating INTEGER NOT NULL,
  PRIMARY KEY (event_id, mode)
);
CREATE TABLE IF NOT EXISTS elicitations (
  seq INTEGER PRIMARY KEY AUTOINCREMENT,
  event_id TEXT NOT NULL,
  user_id TEXT NOT NULL,
  feature TEXT NOT NULL,
  answer TEXT NOT NULL,
  rating INTEGER NOT NULL,
  received_at INTEGER NOT NULL
);
)sql";

std::string event_payload(const TrackedEvent& e) { return json(e).dump(); }

TrackedEvent event_from(const std::string& payload) { return json::parse(payload).get<TrackedEvent>(); }

InformativenessLabel label_from(const Statement& s, int first) {
  return make_label(s.text(first), *parse_mode(s.text(first + 1)), static_cast<int>(s.integer(first + 2)));
}

// RAII savepoint: rolled back unless released.
class Savepoint {
 public:
  explicit Savepoint(sqlite3* db) : db_(db) { exec(db_, "SAVEPOINT row"); }
  ~Savepoint() {
    if (!done_) {
      sqlite3_exec(db_, "ROLLBACK TO row", nullptr, nullptr, nullptr);
      sqlite3_exec(db_, "RELEASE row", nullptr, nullptr, nullptr);
    }
  }
  void release() {
    exec(db_, "RELEASE row");
    done_ = true;
  }

 private:
  sqlite3* db_;
  bool done_ = false;
};

}  // namespace

struct Store::Impl {
  sqlite3* db = nullptr;
  mutable std::recursive_mutex mu;

  ~Impl() {
    if (db) sqlite3_close(db);
  }

  bool put_event(const TrackedEvent& e) {
    validate_event(e);
    const auto payload = event_payload(e);
    Statement q(db, "SELECT payload FROM events WHERE event_id = ?");
    q.bind(1, e.event_id);
    if (q.step()) {
      if (q.text(0) == payload) return false;
      throw ConflictError("event " + e.event_id + " already stored with a different payload");
    }
    Statement ins(db, "INSERT INTO events (event_id, user_id, ts, payload) VALUES (?, ?, ?, ?)");
    ins.bind(1, e.event_id).bind(2, e.user_id).bind(3, e.timestamp).bind(4, payload).step();
    return true;
  }

  bool put_label(const InformativenessLabel& l) {
    binarize_rating(l.rating, l.event_id);
    Statement ev(db, "SELECT 1 FROM events WHERE event_id = ?");
    ev.bind(1, l.event_id);
    if (!ev.step()) throw NotFoundError("label for unknown event " + l.event_id);
    const std::string mode(to_token(l.mode));
    Statement q(db, "SELECT rating FROM labels WHERE event_id = ? AND mode = ?");
    q.bind(1, l.event_id).bind(2, mode);
    if (q.step()) {
      if (q.integer(0) == l.rating) return false;
      throw ConflictError("event " + l.event_id + " already has a " + mode + " rating of " +
                          std::to_string(q.integer(0)));
    }
    Statement ins(db, "INSERT INTO labels (event_id, mode, rating) VALUES (?, ?, ?)");
    ins.bind(1, l.event_id).bind(2, mode).bind(3, std::int64_t{l.rating}).step();
    return true;
  }

  bool put_profile(const UserProfile& p) {
    const auto payload = json(p).dump();
    Statement q(db, "SELECT payload FROM profiles WHERE user_id = ?");
    q.bind(1, p.user_id);
    if (q.step()) {
      if (q.text(0) == payload) return false;
      throw ConflictError("profile " + p.user_id + " already stored with different habits");
    }
    Statement ins(db, "INSERT INTO profiles (user_id, payload) VALUES (?, ?)");
    ins.bind(1, p.user_id).bind(2, payload).step();
    return true;
  }

  std::vector<TrackedEvent> query_events(const char* sql, const std::string* user) const {
    Statement q(db, sql);
    if (user) q.bind(1, *user);
    std::vector<TrackedEvent> out;
    while (q.step()) out.push_back(event_from(q.text(0)));
    return out;
  }
};

Store::Store(const std::filesystem::path& file) : impl_(std::make_unique<Impl>()) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  if (sqlite3_open_v2(file.string().c_str(), &impl_->db, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE, nullptr) !=
      SQLITE_OK) {
    throw Error("store: cannot open " + file.string());
  }
  sqlite3_busy_timeout(impl_->db, 5000);
  exec(impl_->db, "PRAGMA foreign_keys = ON");
  exec(impl_->db, kSchema);
  Statement q(impl_->db, "SELECT value FROM meta WHERE key = 'schema_version'");
  if (q.step()) {
    if (q.text(0) != std::to_string(kStoreSchemaVersion)) {
      throw Error("store: schema version " + q.text(0) + " is not supported (expected " +
                  std::to_string(kStoreSchemaVersion) + ")");
    }
  } else {
    Statement ins(impl_->db, "INSERT INTO meta (key, value) VALUES ('schema_version', ?)");
    ins.bind(1, std::to_string(kStoreSchemaVersion)).step();
  }
}

Store::~Store() = default;

IngestReport Store::ingest(const ParsedEvents& parsed, const ParsedProfiles* profiles) {
  std::lock_guard lock(impl_->mu);
  IngestReport report;
  report.rejected = parsed.errors;
  exec(impl_->db, "BEGIN IMMEDIATE");
  try {
    if (profiles) {
      report.rejected.insert(report.rejected.end(), profiles->errors.begin(), profiles->errors.end());
      for (const auto& [id, p] : profiles->profiles) {
        Savepoint sp(impl_->db);
        try {
          if (impl_->put_profile(p)) ++report.profiles_inserted;
          else ++report.profiles_unchanged;
          sp.release();
        } catch (const ConflictError& e) {
          report.conflicts.push_back({0, "user_id", e.what()});
        }
      }
    }
    for (std::size_t i = 0; i < parsed.records.size(); ++i) {
      const auto& r = parsed.records[i];
      const std::size_t row = i < parsed.record_rows.size() ? parsed.record_rows[i] : i + 1;
      Savepoint sp(impl_->db);
      try {
        const bool fresh = impl_->put_event(r.event);
        bool new_label = false;
        if (const auto l = r.label()) new_label = impl_->put_label(*l);
        sp.release();
        if (fresh) ++report.events_inserted;
        else ++report.events_unchanged;
        if (new_label) ++report.labels_inserted;
      } catch (const ConflictError& e) {
        report.conflicts.push_back({row, "event_id", e.what()});
      } catch (const ValidationError& e) {
        report.rejected.push_back({row, "", e.what()});
      }
    }
    exec(impl_->db, "COMMIT");
  } catch (...) {
    sqlite3_exec(impl_->db, "ROLLBACK", nullptr, nullptr, nullptr);
    throw;
  }
  return report;
}

IngestReport Store::ingest(std::span<const EventLogRecord> records) {
  ParsedEvents parsed;
  parsed.records.assign(records.begin(), records.end());
  for (std::size_t i = 0; i < records.size(); ++i) parsed.record_rows.push_back(i + 1);
  return ingest(parsed);
}

bool Store::put_event(const TrackedEvent& event) {
  std::lock_guard lock(impl_->mu);
  return impl_->put_event(event);
}

bool Store::put_profile(const UserProfile& profile) {
  std::lock_guard lock(impl_->mu);
  return impl_->put_profile(profile);
}

bool Store::put_label(const InformativenessLabel& label) {
  std::lock_guard lock(impl_->mu);
  return impl_->put_label(label);
}

std::int64_t Store::append_elicitation(const ElicitationRecord& r) {
  std::lock_guard lock(impl_->mu);
  binarize_rating(r.rating, r.event_id);
  Statement ins(impl_->db,
                "INSERT INTO elicitations (event_id, user_id, feature, answer, rating, received_at) "
                "VALUES (?, ?, ?, ?, ?, ?)");
  ins.bind(1, r.event_id).bind(2, r.user_id).bind(3, r.feature).bind(4, r.answer);
  ins.bind(5, std::int64_t{r.rating}).bind(6, r.received_at).step();
  return sqlite3_last_insert_rowid(impl_->db);
}

std::optional<TrackedEvent> Store::find_event(const std::string& event_id) const {
  std::lock_guard lock(impl_->mu);
  Statement q(impl_->db, "SELECT payload FROM events WHERE event_id = ?");
  q.bind(1, event_id);
  if (!q.step()) return std::nullopt;
  return event_from(q.text(0));
}

std::optional<UserProfile> Store::find_profile(const std::string& user_id) const {
  std::lock_guard lock(impl_->mu);
  Statement q(impl_->db, "SELECT payload FROM profiles WHERE user_id = ?");
  q.bind(1, user_id);
  if (!q.step()) return std::nullopt;
  return json::parse(q.text(0)).get<UserProfile>();
}

bool Store::has_user(const std::string& user_id) const {
  std::lock_guard lock(impl_->mu);
  Statement q(impl_->db,
              "SELECT 1 FROM events WHERE user_id = ?1 UNION ALL SELECT 1 FROM profiles WHERE user_id = ?1 LIMIT 1");
  q.bind(1, user_id);
  return q.step();
}

std::vector<TrackedEvent> Store::events_for_user(const std::string& user_id) const {
  std::lock_guard lock(impl_->mu);
  return impl_->query_events("SELECT payload FROM events WHERE user_id = ? ORDER BY ts, event_id", &user_id);
}

std::vector<TrackedEvent> Store::events() const {
  std::lock_guard lock(impl_->mu);
  return impl_->query_events("SELECT payload FROM events ORDER BY user_id, ts, event_id", nullptr);
}

std::vector<InformativenessLabel> Store::labels() const {
  std::lock_guard lock(impl_->mu);
  Statement q(impl_->db, "SELECT event_id, mode, rating FROM labels ORDER BY event_id, mode");
  std::vector<InformativenessLabel> out;
  while (q.step()) out.push_back(label_from(q, 0));
  return out;
}

std::vector<ElicitationRecord> Store::elicitations() const {
  std::lock_guard lock(impl_->mu);
  Statement q(impl_->db,
              "SELECT event_id, user_id, feature, answer, rating, received_at FROM elicitations ORDER BY seq");
  std::vector<ElicitationRecord> out;
  while (q.step()) {
    out.push_back({q.text(0), q.text(1), q.text(2), q.text(3), static_cast<int>(q.integer(4)), q.integer(5)});
  }
  return out;
}

StoreSnapshot Store::snapshot() const {
  std::lock_guard lock(impl_->mu);
  exec(impl_->db, "BEGIN");
  StoreSnapshot s;
  try {
    s.events = events();
    Statement q(impl_->db, "SELECT user_id, payload FROM profiles ORDER BY user_id");
    while (q.step()) s.profiles.emplace(q.text(0), json::parse(q.text(1)).get<UserProfile>());
    s.labels = labels();
    s.elicitations = elicitations();
    exec(impl_->db, "COMMIT");
  } catch (...) {
    sqlite3_exec(impl_->db, "ROLLBACK", nullptr, nullptr, nullptr);
    throw;
  }
  return s;
}

std::size_t Store::event_count() const {
  std::lock_guard lock(impl_->mu);
  Statement q(impl_->db, "SELECT COUNT(*) FROM events");
  q.step();
  return static_cast<std::size_t>(q.integer(0));
}

std::size_t Store::label_count() const {
  std::lock_guard lock(impl_->mu);
  Statement q(impl_->db, "SELECT COUNT(*) FROM labels");
  q.step();
  return static_cast<std::size_t>(q.integer(0));
}

std::string Store::digest() const {
  std::lock_guard lock(impl_->mu);
  std::uint64_t h = 1469598103934665603ULL;
  auto feed = [&](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= 0xFF;
    h *= 1099511628211ULL;
  };
  for (const char* sql : {"SELECT event_id || '|' || payload FROM events ORDER BY event_id",
                          "SELECT user_id || '|' || payload FROM profiles ORDER BY user_id",
                          "SELECT event_id || '|' || mode || '|' || rating FROM labels ORDER BY event_id, mode",
                          "SELECT seq || '|' || event_id || '|' || user_id || '|' || feature || '|' || answer || "
                          "'|' || rating || '|' || received_at FROM elicitations ORDER BY seq"}) {
    Statement q(impl_->db, sql);
    while (q.step()) feed(q.text(0));
    feed("#");
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace salient::service
