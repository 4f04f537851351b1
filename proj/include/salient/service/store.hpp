#pragma once

// Single-file transactional store for events, profiles, labels and the
// elicitation audit log. Events, labels and profiles are immutable once
// stored: re-ingesting an identical row is a no-op and a differing row with
// the same key is a conflict. Elicitations are append-only.
//
// All methods are safe to call from several threads; writes are serialized.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "salient/domain.hpp"
#include "salient/service/records.hpp"

namespace salient::service {

inline constexpr int kStoreSchemaVersion = 1;

struct IngestReport {
  std::size_t events_inserted = 0;
  std::size_t events_unchanged = 0;
  std::size_t labels_inserted = 0;
  std::size_t profiles_inserted = 0;
  std::size_t profiles_unchanged = 0;
  std::vector<RowError> rejected;   // invalid rows, never stored
  std::vector<RowError> conflicts;  // same key, different payload

  bool ok() const { return rejected.empty() && conflicts.empty(); }
};

// Everything a training run reads, taken in one read transaction.
struct StoreSnapshot {
  std::vector<TrackedEvent> events;  // sorted by (user_id, timestamp, event_id)
  std::map<std::string, UserProfile> profiles;
  std::vector<InformativenessLabel> labels;  // sorted by (event_id, mode)
  std::vector<ElicitationRecord> elicitations;
};

class Store {
 public:
  // Opens or creates the database file; parent directories are created.
  // Throws Error on a schema version mismatch.
  explicit Store(const std::filesystem::path& file);
  ~Store();
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  // Each record (event plus its optional label) is stored whole or not at
  // all. Parse errors already in `parsed` are carried into the report.
  IngestReport ingest(const ParsedEvents& parsed, const ParsedProfiles* profiles = nullptr);
  IngestReport ingest(std::span<const EventLogRecord> records);

  // Throws ConflictError when a different event / profile / label with the
  // same key exists. Returns false when an identical one does.
  bool put_event(const TrackedEvent& event);
  bool put_profile(const UserProfile& profile);
  bool put_label(const InformativenessLabel& label);

  // Returns the new record's sequence number.
  std::int64_t append_elicitation(const ElicitationRecord& record);

  std::optional<TrackedEvent> find_event(const std::string& event_id) const;
  std::optional<UserProfile> find_profile(const std::string& user_id) const;
  bool has_user(const std::string& user_id) const;
  std::vector<TrackedEvent> events_for_user(const std::string& user_id) const;
  std::vector<TrackedEvent> events() const;
  std::vector<InformativenessLabel> labels() const;
  std::vector<ElicitationRecord> elicitations() const;
  StoreSnapshot snapshot() const;

  std::size_t event_count() const;
  std::size_t label_count() const;

  // Hex digest of the full store content in key order.
  std::string digest() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace salient::service
