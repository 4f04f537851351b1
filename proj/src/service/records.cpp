#include "salient/service/records.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include <nlohmann/json.hpp>

#include "salient/error.hpp"

namespace salient::service {

namespace {

using nlohmann::json;

std::string macro_column(int m) { return "macro_" + std::string(to_token(static_cast<Macro>(m))); }
std::string group_column(int g) { return "group_" + std::string(to_token(static_cast<FoodGroup>(g))); }
std::string cooking_column(int c) { return "cooking_" + std::string(to_token(static_cast<CookingMethod>(c))); }

const std::set<std::string>& optional_columns() {
  static const std::set<std::string> cols{"rating", "mode"};
  return cols;
}

// Splits one CSV record. Quoted fields may contain commas and doubled quotes
// but not newlines.
std::optional<std::vector<std::string>> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      if (!cur.empty() || was_quoted) return std::nullopt;
      quoted = was_quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
      was_quoted = false;
    } else {
      if (was_quoted) return std::nullopt;
      cur += c;
    }
  }
  if (quoted) return std::nullopt;
  out.push_back(std::move(cur));
  return out;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

std::optional<int> parse_int(std::string_view s) {
  int v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

// Cell values keyed by column, as strings. JSON scalars are converted to
// their CSV spelling first so both formats share one row parser.
using Cells = std::map<std::string, std::string>;

struct RowParser {
  std::size_t row;
  std::vector<RowError>& errors;
  bool failed = false;

  void fail(const std::string& column, std::string message) {
    errors.push_back({row, column, std::move(message)});
    failed = true;
  }

  const std::string* cell(const Cells& cells, const std::string& column, bool required = true) {
    const auto it = cells.find(column);
    if (it == cells.end() || it->second.empty()) {
      if (required) fail(column, "missing value");
      return nullptr;
    }
    return &it->second;
  }

  bool flag(const Cells& cells, const std::string& column) {
    const auto* v = cell(cells, column);
    if (!v) return false;
    if (*v == "1" || *v == "true") return true;
    if (*v == "0" || *v == "false") return false;
    fail(column, "expected 0 or 1, got '" + *v + "'");
    return false;
  }

  int count(const Cells& cells, const std::string& column) {
    const auto* v = cell(cells, column);
    if (!v) return 0;
    const auto n = parse_int(*v);
    if (!n || *n < 0) {
      fail(column, "expected a non-negative integer, got '" + *v + "'");
      return 0;
    }
    return *n;
  }

  std::optional<EventLogRecord> parse(const Cells& cells) {
    EventLogRecord r;
    auto& e = r.event;
    if (const auto* v = cell(cells, "user_id")) e.user_id = *v;
    if (const auto* v = cell(cells, "event_id")) e.event_id = *v;
    if (const auto* v = cell(cells, "timestamp")) {
      if (const auto t = parse_utc(*v)) e.timestamp = *t;
      else fail("timestamp", "expected ISO-8601 UTC time, got '" + *v + "'");
    }
    if (const auto* v = cell(cells, "meal_type")) {
      if (const auto m = parse_meal_type(*v)) e.meal_type = *m;
      else fail("meal_type", "unknown meal type '" + *v + "'");
    }
    auto& a = e.annotations;
    for (int m = 0; m < kMacroCount; ++m) {
      const auto col = macro_column(m);
      if (const auto* v = cell(cells, col)) {
        if (const auto l = parse_level(*v)) a.macro_levels[m] = *l;
        else fail(col, "unknown level '" + *v + "'");
      }
    }
    for (int g = 0; g < kFoodGroupCount; ++g) a.food_groups[g] = flag(cells, group_column(g));
    a.food_group_count = count(cells, "food_group_count");
    for (int c = 0; c < kCookingMethodCount; ++c) a.cooking_methods[c] = flag(cells, cooking_column(c));
    a.ingredient_count = count(cells, "ingredient_count");

    if (const auto* v = cell(cells, "rating", false)) {
      if (const auto n = parse_int(*v)) {
        if (*n < kMinRating || *n > kMaxRating) fail("rating", "rating out of scale −2..+2 (got " + *v + ")");
        else r.rating = *n;
      } else {
        fail("rating", "expected an integer, got '" + *v + "'");
      }
    }
    if (const auto* v = cell(cells, "mode", false)) {
      if (const auto m = parse_mode(*v)) r.mode = *m;
      else fail("mode", "unknown mode '" + *v + "'");
    }
    if (!failed && r.rating.has_value() != r.mode.has_value()) {
      fail(r.rating ? "mode" : "rating", "rating and mode must be given together");
    }
    if (failed) return std::nullopt;
    const auto report = check_event(e);
    for (const auto& v : report.violations) fail("", v);
    if (failed) return std::nullopt;
    return r;
  }
};

std::string scalar_to_cell(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_null()) return "";
  return v.dump();
}

}  // namespace

std::optional<InformativenessLabel> EventLogRecord::label() const {
  if (!rating || !mode) return std::nullopt;
  return make_label(event.event_id, *mode, *rating);
}

std::string RowError::to_string() const {
  std::string s = "row " + std::to_string(row);
  if (!column.empty()) s += ", column '" + column + "'";
  return s + ": " + message;
}

RecordFormat format_of(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? RecordFormat::Csv : RecordFormat::JsonLines;
}

const std::vector<std::string>& event_columns() {
  static const std::vector<std::string> cols = [] {
    std::vector<std::string> c{"user_id", "event_id", "timestamp", "meal_type"};
    for (int m = 0; m < kMacroCount; ++m) c.push_back(macro_column(m));
    for (int g = 0; g < kFoodGroupCount; ++g) c.push_back(group_column(g));
    c.emplace_back("food_group_count");
    for (int k = 0; k < kCookingMethodCount; ++k) c.push_back(cooking_column(k));
    c.emplace_back("ingredient_count");
    c.emplace_back("rating");
    c.emplace_back("mode");
    return c;
  }();
  return cols;
}

ParsedEvents read_event_csv(std::istream& in) {
  ParsedEvents out;
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("csv", {"empty input, expected a header row"});
  strip_cr(line);
  const auto header = split_csv(line);
  if (!header) throw ValidationError("csv", {"row 1: malformed header"});
  const auto& known = event_columns();
  std::vector<std::string> problems;
  std::set<std::string> seen;
  for (std::size_t c = 0; c < header->size(); ++c) {
    const auto& name = (*header)[c];
    if (std::find(known.begin(), known.end(), name) == known.end()) {
      problems.push_back("row 1, column " + std::to_string(c + 1) + " '" + name + "': unknown column");
    } else if (!seen.insert(name).second) {
      problems.push_back("row 1, column " + std::to_string(c + 1) + " '" + name + "': duplicate column");
    }
  }
  for (const auto& name : known) {
    if (!seen.count(name) && !optional_columns().count(name)) {
      problems.push_back("row 1: missing column '" + name + "'");
    }
  }
  if (!problems.empty()) throw ValidationError("csv header", problems);

  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (!fields) {
      out.errors.push_back({row, "", "malformed quoting"});
      continue;
    }
    if (fields->size() != header->size()) {
      out.errors.push_back({row, "", "expected " + std::to_string(header->size()) + " fields, got " +
                                         std::to_string(fields->size())});
      continue;
    }
    Cells cells;
    for (std::size_t c = 0; c < fields->size(); ++c) cells[(*header)[c]] = (*fields)[c];
    RowParser p{row, out.errors};
    if (auto r = p.parse(cells)) {
      out.records.push_back(std::move(*r));
      out.record_rows.push_back(row);
    }
  }
  return out;
}

ParsedEvents read_event_jsonl(std::istream& in) {
  ParsedEvents out;
  const auto& known = event_columns();
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    strip_cr(line);
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      out.errors.push_back({row, "", "malformed JSON"});
      continue;
    }
    if (!j.is_object()) {
      out.errors.push_back({row, "", "expected a JSON object"});
      continue;
    }
    Cells cells;
    bool bad = false;
    for (const auto& [key, value] : j.items()) {
      if (std::find(known.begin(), known.end(), key) == known.end()) {
        out.errors.push_back({row, key, "unknown column"});
        bad = true;
      } else if (value.is_object() || value.is_array()) {
        out.errors.push_back({row, key, "expected a scalar"});
        bad = true;
      } else {
        cells[key] = scalar_to_cell(value);
      }
    }
    if (bad) continue;
    RowParser p{row, out.errors};
    if (auto r = p.parse(cells)) {
      out.records.push_back(std::move(*r));
      out.record_rows.push_back(row);
    }
  }
  return out;
}

ParsedEvents read_events(std::istream& in, RecordFormat format) {
  return format == RecordFormat::Csv ? read_event_csv(in) : read_event_jsonl(in);
}

ParsedEvents read_events(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open " + path.string());
  return read_events(in, format_of(path));
}

namespace {

std::vector<std::string> record_cells(const EventLogRecord& r) {
  const auto& e = r.event;
  const auto& a = e.annotations;
  std::vector<std::string> c{e.user_id, e.event_id, format_utc(e.timestamp), std::string(to_token(e.meal_type))};
  for (int m = 0; m < kMacroCount; ++m) c.emplace_back(to_token(a.macro_levels[m]));
  for (int g = 0; g < kFoodGroupCount; ++g) c.emplace_back(a.food_groups[g] ? "1" : "0");
  c.push_back(std::to_string(a.food_group_count));
  for (int k = 0; k < kCookingMethodCount; ++k) c.emplace_back(a.cooking_methods[k] ? "1" : "0");
  c.push_back(std::to_string(a.ingredient_count));
  c.push_back(r.rating ? std::to_string(*r.rating) : "");
  c.push_back(r.mode ? std::string(to_token(*r.mode)) : "");
  return c;
}

}  // namespace

void write_event_csv(std::ostream& out, std::span<const EventLogRecord> records) {
  const auto& cols = event_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& r : records) {
    const auto cells = record_cells(r);
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << csv_quote(cells[i]);
    out << '\n';
  }
}

void write_event_jsonl(std::ostream& out, std::span<const EventLogRecord> records) {
  const auto& cols = event_columns();
  for (const auto& r : records) {
    const auto cells = record_cells(r);
    json j = json::object();
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (!cells[i].empty()) j[cols[i]] = cells[i];
    }
    out << j.dump() << '\n';
  }
}

ParsedProfiles read_profiles_jsonl(std::istream& in) {
  ParsedProfiles out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    strip_cr(line);
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      auto p = json::parse(line).get<UserProfile>();
      if (p.user_id.empty()) {
        out.errors.push_back({row, "user_id", "missing value"});
        continue;
      }
      auto id = p.user_id;
      if (!out.profiles.emplace(id, std::move(p)).second) {
        out.errors.push_back({row, "user_id", "duplicate profile '" + id + "'"});
      }
    } catch (const json::exception& e) {
      out.errors.push_back({row, "", std::string("malformed profile: ") + e.what()});
    } catch (const ValidationError& e) {
      out.errors.push_back({row, "", e.what()});
    }
  }
  return out;
}

void write_profiles_jsonl(std::ostream& out, const std::map<std::string, UserProfile>& profiles) {
  for (const auto& [id, p] : profiles) out << json(p).dump() << '\n';
}

void to_json(nlohmann::json& j, const ElicitationRecord& r) {
  j = json{{"event_id", r.event_id}, {"user_id", r.user_id},         {"feature", r.feature},
           {"answer", r.answer},     {"rating", r.rating},           {"received_at", format_utc(r.received_at)}};
}

void from_json(const nlohmann::json& j, ElicitationRecord& r) {
  if (!j.is_object()) throw ValidationError("elicitation", {"expected a JSON object"});
  std::vector<std::string> problems;
  auto text = [&](const char* key, std::string& dst) {
    if (!j.contains(key) || !j[key].is_string() || j[key].get<std::string>().empty()) {
      problems.push_back(std::string("missing string field '") + key + "'");
    } else {
      dst = j[key].get<std::string>();
    }
  };
  text("event_id", r.event_id);
  text("user_id", r.user_id);
  text("feature", r.feature);
  text("answer", r.answer);
  if (!j.contains("rating") || !j["rating"].is_number_integer()) {
    problems.emplace_back("missing integer field 'rating'");
  } else {
    r.rating = j["rating"].get<int>();
    if (r.rating < kMinRating || r.rating > kMaxRating) {
      problems.push_back("rating out of scale −2..+2 (got " + std::to_string(r.rating) + ")");
    }
  }
  if (j.contains("received_at")) {
    const auto t = j["received_at"].is_string() ? parse_utc(j["received_at"].get<std::string>()) : std::nullopt;
    if (!t) problems.emplace_back("received_at must be an ISO-8601 UTC time");
    else r.received_at = *t;
  }
  for (const auto& [key, value] : j.items()) {
    static const std::set<std::string> known{"event_id", "user_id", "feature", "answer", "rating", "received_at"};
    if (!known.count(key)) problems.push_back("unknown field '" + key + "'");
  }
  if (!problems.empty()) throw ValidationError("elicitation", problems);
}

std::optional<std::int64_t> parse_utc(std::string_view s) {
  using namespace std::chrono;
  int y, mo, d, h, mi, sec;
  int used = 0;
  const std::string str(s);
  if (std::sscanf(str.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%n", &y, &mo, &d, &h, &mi, &sec, &used) != 6 || used != 19) {
    return std::nullopt;
  }
  std::string_view rest = s.substr(19);
  if (!rest.empty() && rest.front() == '.') {
    std::size_t i = 1;
    while (i < rest.size() && rest[i] >= '0' && rest[i] <= '9') ++i;
    if (i == 1) return std::nullopt;
    rest.remove_prefix(i);
  }
  if (rest != "Z" && rest != "+00:00") return std::nullopt;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || sec > 59 || h < 0 || mi < 0 || sec < 0) return std::nullopt;
  const auto days = sys_days(ymd).time_since_epoch().count();
  return static_cast<std::int64_t>(days) * 86400 + h * 3600 + mi * 60 + sec;
}

std::string format_utc(std::int64_t seconds) {
  using namespace std::chrono;
  const sys_seconds t{std::chrono::seconds{seconds}};
  const auto day_start = floor<days>(t);
  const year_month_day ymd{day_start};
  const hh_mm_ss hms{t - day_start};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                static_cast<long>(hms.seconds().count()));
  return buf;
}

std::string iso_week(std::int64_t seconds) {
  using namespace std::chrono;
  const auto d = floor<days>(sys_seconds{std::chrono::seconds{seconds}});
  // The ISO year is the year of this week's Thursday.
  const weekday wd{d};
  const auto thursday = d + (days{4} - days{wd.iso_encoding()});
  const year_month_day ty{thursday};
  const sys_days jan1{ty.year() / January / 1};
  const int week = static_cast<int>((thursday - jan1).count() / 7) + 1;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-W%02d", static_cast<int>(ty.year()), week);
  return buf;
}

bool is_iso_week(std::string_view s) {
  if (s.size() != 8 || s[4] != '-' || s[5] != 'W') return false;
  for (std::size_t i : {0, 1, 2, 3, 6, 7}) {
    if (s[i] < '0' || s[i] > '9') return false;
  }
  const int w = (s[6] - '0') * 10 + (s[7] - '0');
  if (w < 1 || w > 53) return false;
  if (w < 53) return true;
  // Week 53 exists when December 28 falls in it.
  const auto dec28 = parse_utc(std::string(s.substr(0, 4)) + "-12-28T00:00:00Z");
  return dec28 && iso_week(*dec28) == s;
}

}  // namespace salient::service
