#include "salient/domain.hpp"

#include <algorithm>
#include <cctype>

#include <nlohmann/json.hpp>

#include "salient/error.hpp"

namespace salient {

namespace {

std::string join_violations(const std::string& subject, const std::vector<std::string>& v) {
  std::string msg = "validation failed for " + subject + ":";
  for (std::size_t i = 0; i < v.size(); ++i) {
    msg += (i == 0 ? " " : "; ") + v[i];
  }
  return msg;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

template <typename Enum, std::size_t N>
std::optional<Enum> parse_from(std::string_view s, const std::array<std::string_view, N>& tokens) {
  for (std::size_t i = 0; i < N; ++i) {
    if (iequals(s, tokens[i])) return static_cast<Enum>(i);
  }
  return std::nullopt;
}

constexpr std::array<std::string_view, kMealTypeCount> kMealTokens{"breakfast", "lunch", "dinner",
                                                                   "snack"};
constexpr std::array<std::string_view, 3> kLevelTokens{"low", "medium", "high"};
constexpr std::array<std::string_view, kMacroCount> kMacroTokens{"calorie", "carbs", "protein",
                                                                 "fat", "fiber"};
constexpr std::array<std::string_view, kFoodGroupCount> kFoodGroupTokens{
    "grains", "vegetables", "meat", "fruits", "dairy"};
constexpr std::array<std::string_view, kCookingMethodCount> kCookingTokens{
    "baked",   "pan_air_fried", "deep_fried", "steamed", "grilled",
    "boiled",  "roasted",       "microwaved", "raw"};
constexpr std::array<std::string_view, kFrequencyCount> kFrequencyTokens{
    "never", "lt_weekly", "weekly_1_3", "weekly_4_6", "daily_1", "daily_2_3", "daily_4plus"};
constexpr std::array<std::string_view, kHabitCount> kHabitTokens{"prior_habit_vegetables",
                                                                 "prior_habit_fruits"};
constexpr std::array<std::string_view, 2> kModeTokens{"manual", "auto"};

constexpr std::array<std::string_view, 3> kLevelWords{"Low", "Medium", "High"};
constexpr std::array<std::string_view, kMacroCount> kMacroWords{"Calorie", "Carbs", "Protein",
                                                                "Fat", "Fiber"};
constexpr std::array<std::string_view, kFoodGroupCount> kFoodGroupWords{
    "Grains", "Vegetables", "Meat", "Fruits", "Dairy"};
constexpr std::array<std::string_view, kCookingMethodCount> kCookingWords{
    "Baked",  "Pan/Air Fried", "Deep Fried", "Steamed", "Grilled",
    "Boiled", "Roasted",       "Microwaved", "Raw"};
constexpr std::array<std::string_view, kFrequencyCount> kFrequencyWords{
    "Never", "<1x/week", "1-3x/week", "4-6x/week", "1x/day", "2-3x/day", "4+x/day"};
constexpr std::array<std::string_view, kHabitCount> kHabitWords{"Vegetables", "Fruits"};

template <typename E>
constexpr std::size_t idx(E v) {
  return static_cast<std::size_t>(v);
}

}  // namespace

ValidationError::ValidationError(std::string subject, std::vector<std::string> violations)
    : Error(join_violations(subject, violations)),
      subject_(std::move(subject)),
      violations_(std::move(violations)) {}

bool binarize_rating(int rating, std::string_view event_id) {
  if (rating < kMinRating || rating > kMaxRating) {
    throw ValidationError(event_id.empty() ? std::string("rating") : std::string(event_id),
                          {"rating out of scale −2..+2 (got " + std::to_string(rating) + ")"});
  }
  return rating > 0;
}

InformativenessLabel make_label(std::string event_id, FeedbackMode mode, int rating) {
  const bool label = binarize_rating(rating, event_id);
  return InformativenessLabel{std::move(event_id), mode, rating, label};
}

ValidationReport check_event(const TrackedEvent& event) {
  ValidationReport report;
  auto& v = report.violations;
  if (event.event_id.empty()) v.emplace_back("empty event_id");
  if (event.user_id.empty()) v.emplace_back("empty user_id");
  if (idx(event.meal_type) >= kMealTypeCount) v.emplace_back("unknown meal_type");
  const auto& a = event.annotations;
  for (int m = 0; m < kMacroCount; ++m) {
    if (idx(a.macro_levels[m]) > 2) {
      v.emplace_back("macro level out of range for " + std::string(kMacroTokens[m]));
    }
  }
  const auto true_groups = std::count(a.food_groups.begin(), a.food_groups.end(), true);
  if (a.food_group_count < 0 || a.food_group_count > kFoodGroupCount) {
    v.emplace_back("food_group_count out of range 0..5");
  } else if (a.food_group_count != true_groups) {
    v.emplace_back("count mismatch: food_group_count " + std::to_string(a.food_group_count) +
                   " but " + std::to_string(true_groups) + " food groups present");
  }
  if (a.ingredient_count < 0) v.emplace_back("negative ingredient_count");
  return report;
}

const TrackedEvent& validate_event(const TrackedEvent& event) {
  auto report = check_event(event);
  if (!report.ok()) {
    throw ValidationError("event " + event.event_id, std::move(report.violations));
  }
  return event;
}

std::string_view to_token(MealType v) { return kMealTokens.at(idx(v)); }
std::string_view to_token(Level v) { return kLevelTokens.at(idx(v)); }
std::string_view to_token(Macro v) { return kMacroTokens.at(idx(v)); }
std::string_view to_token(FoodGroup v) { return kFoodGroupTokens.at(idx(v)); }
std::string_view to_token(CookingMethod v) { return kCookingTokens.at(idx(v)); }
std::string_view to_token(Frequency v) { return kFrequencyTokens.at(idx(v)); }
std::string_view to_token(Habit v) { return kHabitTokens.at(idx(v)); }
std::string_view to_token(FeedbackMode v) { return kModeTokens.at(idx(v)); }

std::optional<MealType> parse_meal_type(std::string_view s) {
  return parse_from<MealType>(s, kMealTokens);
}
std::optional<Level> parse_level(std::string_view s) {
  if (s == "0") return Level::Low;
  if (s == "1") return Level::Medium;
  if (s == "2") return Level::High;
  return parse_from<Level>(s, kLevelTokens);
}
std::optional<Frequency> parse_frequency(std::string_view s) {
  if (s.size() == 1 && s[0] >= '0' && s[0] <= '6') return static_cast<Frequency>(s[0] - '0');
  return parse_from<Frequency>(s, kFrequencyTokens);
}
std::optional<FeedbackMode> parse_mode(std::string_view s) {
  return parse_from<FeedbackMode>(s, kModeTokens);
}

std::string_view level_word(Level v) { return kLevelWords.at(idx(v)); }
std::string_view macro_word(Macro v) { return kMacroWords.at(idx(v)); }
std::string_view food_group_word(FoodGroup v) { return kFoodGroupWords.at(idx(v)); }
std::string_view cooking_word(CookingMethod v) { return kCookingWords.at(idx(v)); }
std::string_view frequency_word(Frequency v) { return kFrequencyWords.at(idx(v)); }
std::string_view habit_word(Habit v) { return kHabitWords.at(idx(v)); }

void to_json(nlohmann::json& j, const TrackedEvent& e) {
  const auto& a = e.annotations;
  nlohmann::json macros = nlohmann::json::object();
  for (int m = 0; m < kMacroCount; ++m) {
    macros[std::string(kMacroTokens[m])] = std::string(to_token(a.macro_levels[m]));
  }
  nlohmann::json groups = nlohmann::json::object();
  for (int g = 0; g < kFoodGroupCount; ++g) groups[std::string(kFoodGroupTokens[g])] = a.food_groups[g];
  nlohmann::json cooking = nlohmann::json::object();
  for (int c = 0; c < kCookingMethodCount; ++c) {
    cooking[std::string(kCookingTokens[c])] = a.cooking_methods[c];
  }
  j = nlohmann::json{{"event_id", e.event_id},
                     {"user_id", e.user_id},
                     {"timestamp", e.timestamp},
                     {"meal_type", std::string(to_token(e.meal_type))},
                     {"annotations",
                      {{"macro_levels", macros},
                       {"food_groups", groups},
                       {"food_group_count", a.food_group_count},
                       {"cooking_methods", cooking},
                       {"ingredient_count", a.ingredient_count}}}};
}

void from_json(const nlohmann::json& j, TrackedEvent& e) {
  std::vector<std::string> errors;
  const std::string id = j.value("event_id", std::string{});
  e.event_id = id;
  e.user_id = j.value("user_id", std::string{});
  e.timestamp = j.value("timestamp", std::int64_t{0});
  if (auto mt = parse_meal_type(j.value("meal_type", std::string{}))) {
    e.meal_type = *mt;
  } else {
    errors.push_back("unknown enum token for meal_type: '" + j.value("meal_type", std::string{}) + "'");
  }
  const auto& ann = j.at("annotations");
  const auto& macros = ann.at("macro_levels");
  for (int m = 0; m < kMacroCount; ++m) {
    const std::string key(kMacroTokens[m]);
    if (!macros.contains(key)) {
      errors.push_back("missing macro key '" + key + "'");
      continue;
    }
    const auto& val = macros.at(key);
    const std::string tok = val.is_number_integer() ? std::to_string(val.get<int>()) : val.get<std::string>();
    if (auto lv = parse_level(tok)) {
      e.annotations.macro_levels[m] = *lv;
    } else {
      errors.push_back("unknown enum token for " + key + ": '" + tok + "'");
    }
  }
  if (macros.size() != static_cast<std::size_t>(kMacroCount)) {
    for (const auto& [k, _] : macros.items()) {
      if (std::find(kMacroTokens.begin(), kMacroTokens.end(), k) == kMacroTokens.end()) {
        errors.push_back("unknown macro key '" + k + "'");
      }
    }
  }
  const auto& groups = ann.at("food_groups");
  for (int g = 0; g < kFoodGroupCount; ++g) {
    e.annotations.food_groups[g] = groups.value(std::string(kFoodGroupTokens[g]), false);
  }
  e.annotations.food_group_count = ann.value("food_group_count", 0);
  const auto& cooking = ann.at("cooking_methods");
  for (int c = 0; c < kCookingMethodCount; ++c) {
    e.annotations.cooking_methods[c] = cooking.value(std::string(kCookingTokens[c]), false);
  }
  e.annotations.ingredient_count = ann.value("ingredient_count", 0);
  if (!errors.empty()) throw ValidationError("event " + id, std::move(errors));
}

void to_json(nlohmann::json& j, const UserProfile& p) {
  j = nlohmann::json{{"user_id", p.user_id}};
  for (int h = 0; h < kHabitCount; ++h) {
    if (p.prior_habits[h]) j[std::string(kHabitTokens[h])] = std::string(to_token(*p.prior_habits[h]));
  }
}

void from_json(const nlohmann::json& j, UserProfile& p) {
  p.user_id = j.value("user_id", std::string{});
  for (int h = 0; h < kHabitCount; ++h) {
    const std::string key(kHabitTokens[h]);
    if (!j.contains(key)) continue;
    auto f = parse_frequency(j.at(key).get<std::string>());
    if (!f) throw ValidationError("profile " + p.user_id, {"unknown enum token for " + key});
    p.prior_habits[h] = *f;
  }
}

}  // namespace salient
