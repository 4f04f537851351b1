#pragma once

// Canonical data model: tracked meal events, their nutrition annotations,
// informativeness labels and user profiles. Everything downstream consumes
// these types; they are plain values and immutable once validated.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace salient {

enum class MealType : std::uint8_t { Breakfast, Lunch, Dinner, Snack };
inline constexpr int kMealTypeCount = 4;

enum class Level : std::uint8_t { Low = 0, Medium = 1, High = 2 };

enum class Macro : std::uint8_t { Calorie, Carbs, Protein, Fat, Fiber };
inline constexpr int kMacroCount = 5;

enum class FoodGroup : std::uint8_t { Grains, Vegetables, Meat, Fruits, Dairy };
inline constexpr int kFoodGroupCount = 5;

enum class CookingMethod : std::uint8_t {
  Baked,
  PanAirFried,
  DeepFried,
  Steamed,
  Grilled,
  Boiled,
  Roasted,
  Microwaved,
  Raw
};
inline constexpr int kCookingMethodCount = 9;

enum class Frequency : std::uint8_t {
  Never = 0,
  LessThanWeekly = 1,
  Weekly1to3 = 2,
  Weekly4to6 = 3,
  Daily1 = 4,
  Daily2to3 = 5,
  Daily4plus = 6
};
inline constexpr int kFrequencyCount = 7;

enum class Habit : std::uint8_t { Vegetables, Fruits };
inline constexpr int kHabitCount = 2;

enum class FeedbackMode : std::uint8_t { Manual = 0, Auto = 1 };
inline constexpr std::array<FeedbackMode, 2> kAllModes{FeedbackMode::Manual,
                                                       FeedbackMode::Auto};

struct AnnotationVector {
  std::array<Level, kMacroCount> macro_levels{};
  std::array<bool, kFoodGroupCount> food_groups{};
  int food_group_count = 0;
  std::array<bool, kCookingMethodCount> cooking_methods{};
  int ingredient_count = 0;

  Level macro(Macro m) const { return macro_levels[static_cast<int>(m)]; }
  bool has(FoodGroup g) const { return food_groups[static_cast<int>(g)]; }
  bool cooked(CookingMethod c) const { return cooking_methods[static_cast<int>(c)]; }

  bool operator==(const AnnotationVector&) const = default;
};

struct TrackedEvent {
  std::string event_id;
  std::string user_id;
  std::int64_t timestamp = 0;  // UTC seconds
  MealType meal_type = MealType::Breakfast;
  AnnotationVector annotations;

  bool operator==(const TrackedEvent&) const = default;
};

struct UserProfile {
  std::string user_id;
  std::array<std::optional<Frequency>, kHabitCount> prior_habits{};

  std::optional<Frequency> habit(Habit h) const { return prior_habits[static_cast<int>(h)]; }
  bool operator==(const UserProfile&) const = default;
};

struct InformativenessLabel {
  std::string event_id;
  FeedbackMode mode = FeedbackMode::Manual;
  int rating = 0;  // bipolar -2..+2
  bool label = false;

  bool operator==(const InformativenessLabel&) const = default;
};

inline constexpr int kMinRating = -2;
inline constexpr int kMaxRating = 2;

// Throws ValidationError naming `event_id` when the rating is off the scale.
bool binarize_rating(int rating, std::string_view event_id = {});

// Builds a label, validating and binarizing the rating.
InformativenessLabel make_label(std::string event_id, FeedbackMode mode, int rating);

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

ValidationReport check_event(const TrackedEvent& event);

// Returns the event unchanged when every invariant holds, otherwise throws a
// ValidationError carrying the full report.
const TrackedEvent& validate_event(const TrackedEvent& event);

// Stable lowercase tokens used by every file format and the HTTP API.
std::string_view to_token(MealType v);
std::string_view to_token(Level v);
std::string_view to_token(Macro v);
std::string_view to_token(FoodGroup v);
std::string_view to_token(CookingMethod v);
std::string_view to_token(Frequency v);
std::string_view to_token(Habit v);
std::string_view to_token(FeedbackMode v);

// Case-insensitive parsers; std::nullopt for an unknown token.
std::optional<MealType> parse_meal_type(std::string_view s);
std::optional<Level> parse_level(std::string_view s);
std::optional<Frequency> parse_frequency(std::string_view s);
std::optional<FeedbackMode> parse_mode(std::string_view s);

// Display words ("Low", "Pan/Air Fried", "4-6x/week", ...).
std::string_view level_word(Level v);
std::string_view macro_word(Macro v);
std::string_view food_group_word(FoodGroup v);
std::string_view cooking_word(CookingMethod v);
std::string_view frequency_word(Frequency v);
std::string_view habit_word(Habit v);

// JSON encoding of events and profiles. Parsing reports missing macro keys
// and unknown enum tokens as ValidationError.
void to_json(nlohmann::json& j, const TrackedEvent& e);
void from_json(const nlohmann::json& j, TrackedEvent& e);
void to_json(nlohmann::json& j, const UserProfile& p);
void from_json(const nlohmann::json& j, UserProfile& p);

}  // namespace salient
