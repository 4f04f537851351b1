#pragma once

// Flat ingestion rows (CSV and JSON lines), profile files and elicitation
// records.
//
// Event columns, in export order:
//   user_id, event_id, timestamp (ISO-8601 UTC), meal_type,
//   macro_<calorie|carbs|protein|fat|fiber>      level word or 0/1/2
//   group_<grains|vegetables|meat|fruits|dairy>  0/1
//   food_group_count
//   cooking_<method>                             0/1, one per cooking method
//   ingredient_count
//   rating, mode                                 optional, labeled rows only

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "salient/domain.hpp"

namespace salient::service {

inline constexpr int kRecordFormatVersion = 1;

struct EventLogRecord {
  TrackedEvent event;
  std::optional<int> rating;
  std::optional<FeedbackMode> mode;

  std::optional<InformativenessLabel> label() const;
  bool operator==(const EventLogRecord&) const = default;
};

// One rejected row. `row` is the 1-based line number in the input (the CSV
// header is line 1); `column` is empty when the whole row is at fault.
struct RowError {
  std::size_t row = 0;
  std::string column;
  std::string message;

  std::string to_string() const;
};

struct ParsedEvents {
  std::vector<EventLogRecord> records;
  std::vector<std::size_t> record_rows;  // input line of each record
  std::vector<RowError> errors;
};

enum class RecordFormat { Csv, JsonLines };

// From the extension: .csv, otherwise JSON lines.
RecordFormat format_of(const std::filesystem::path& path);

const std::vector<std::string>& event_columns();

// Header problems (unknown or missing columns) throw ValidationError; row
// problems are collected and the row is dropped whole.
ParsedEvents read_event_csv(std::istream& in);
ParsedEvents read_event_jsonl(std::istream& in);
ParsedEvents read_events(std::istream& in, RecordFormat format);
ParsedEvents read_events(const std::filesystem::path& path);

void write_event_csv(std::ostream& out, std::span<const EventLogRecord> records);
void write_event_jsonl(std::ostream& out, std::span<const EventLogRecord> records);

struct ParsedProfiles {
  std::map<std::string, UserProfile> profiles;
  std::vector<RowError> errors;
};

// One profile JSON object per line.
ParsedProfiles read_profiles_jsonl(std::istream& in);
void write_profiles_jsonl(std::ostream& out, const std::map<std::string, UserProfile>& profiles);

struct ElicitationRecord {
  std::string event_id;
  std::string user_id;
  std::string feature;
  std::string answer;
  int rating = 0;
  std::int64_t received_at = 0;  // UTC seconds

  bool operator==(const ElicitationRecord&) const = default;
};

void to_json(nlohmann::json& j, const ElicitationRecord& r);
// Throws ValidationError on missing fields or an off-scale rating.
void from_json(const nlohmann::json& j, ElicitationRecord& r);

// "2021-03-01T08:30:00Z". Fractional seconds are dropped; offsets other than
// Z / +00:00 are rejected.
std::optional<std::int64_t> parse_utc(std::string_view s);
std::string format_utc(std::int64_t seconds);

// ISO-8601 week of a UTC timestamp, "2021-W09".
std::string iso_week(std::int64_t seconds);
bool is_iso_week(std::string_view s);

}  // namespace salient::service
