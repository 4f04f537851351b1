#pragma once

// Windowed temporal feature extraction over a user's meal stream.
//
// A feature is a (base annotation, aggregator, window) triple. Windows cover
// the current event plus either the n previous events of the user or the most
// recent previous event with the same meal type. When the history is shorter
// than the window, the aggregate is computed over the truncated window and
// the feature's mask bit is set.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "salient/domain.hpp"

namespace salient {

enum class BaseKind : std::uint8_t {
  MacroLevel,
  FoodGroup,
  FoodGroupCount,
  Cooking,
  IngredientCount,
  PriorHabit
};

struct AnnotationPath {
  BaseKind kind = BaseKind::MacroLevel;
  int index = 0;  // macro / food group / cooking method / habit; 0 otherwise

  static AnnotationPath macro(Macro m) { return {BaseKind::MacroLevel, static_cast<int>(m)}; }
  static AnnotationPath food_group(FoodGroup g) { return {BaseKind::FoodGroup, static_cast<int>(g)}; }
  static AnnotationPath food_group_count() { return {BaseKind::FoodGroupCount, 0}; }
  static AnnotationPath cooking(CookingMethod c) { return {BaseKind::Cooking, static_cast<int>(c)}; }
  static AnnotationPath ingredient_count() { return {BaseKind::IngredientCount, 0}; }
  static AnnotationPath habit(Habit h) { return {BaseKind::PriorHabit, static_cast<int>(h)}; }

  bool is_boolean() const { return kind == BaseKind::FoodGroup || kind == BaseKind::Cooking; }
  bool is_level() const { return kind == BaseKind::MacroLevel; }

  // "Meal Macros (Fat level)", "Meal Cooking (Pan/Air Fried)", ...
  std::string label() const;
  // Numeric value of this annotation on one event (booleans as 0/1).
  // Not defined for PriorHabit, which lives on the profile.
  double read(const AnnotationVector& a) const;

  bool operator==(const AnnotationPath&) const = default;
};

enum class Aggregator : std::uint8_t { Identity, Mean, SD, Trend, Change, Highest };

std::string_view to_token(Aggregator a);
std::string_view aggregator_word(Aggregator a);  // "Mean", "SD", ...

struct WindowSpec {
  enum class Kind : std::uint8_t { PrevN, PrevSameMealType };
  Kind kind = Kind::PrevN;
  int n = 1;  // 1..3 for PrevN, 1 for PrevSameMealType

  static WindowSpec prev(int n);
  static WindowSpec same_meal_type() { return {Kind::PrevSameMealType, 1}; }

  // Full window length including the current event.
  int length() const { return n + 1; }
  std::string label() const;  // "Prev3-Current", "PrevSameMealType-Current"

  bool operator==(const WindowSpec&) const = default;
};

struct FeatureSpec {
  std::string name;
  AnnotationPath base;
  Aggregator aggregator = Aggregator::Identity;
  std::optional<WindowSpec> window;

  // Builds a spec and its conventional name; enforces the window invariants.
  static FeatureSpec make(AnnotationPath base, Aggregator agg,
                          std::optional<WindowSpec> window = std::nullopt);

  bool is_current_meal() const { return !window.has_value(); }
  bool operator==(const FeatureSpec&) const = default;
};

class FeatureSchema {
 public:
  FeatureSchema() = default;
  explicit FeatureSchema(std::vector<FeatureSpec> features);

  std::size_t size() const { return features_.size(); }
  const FeatureSpec& operator[](std::size_t i) const { return features_[i]; }
  const std::vector<FeatureSpec>& features() const { return features_; }
  auto begin() const { return features_.begin(); }
  auto end() const { return features_.end(); }

  std::optional<std::size_t> index_of(std::string_view name) const;
  const std::string& fingerprint() const { return fingerprint_; }

  // Columns kept in the given (ascending) order.
  FeatureSchema subset(std::span<const std::size_t> indices) const;

 private:
  std::vector<FeatureSpec> features_;
  std::string fingerprint_;
};

struct FeatureVector {
  std::string event_id;
  std::string schema_fingerprint;
  std::vector<double> values;
  std::vector<std::uint8_t> masked;  // 1 = insufficient history for this feature
};

// The 30 features of the selected production model.
const FeatureSchema& default_schema();

// Every (base, aggregator, window) combination plus current-meal features.
FeatureSchema feature_universe();

// Aggregates a chronological window (current value last). Change maps to
// -1/0/+1 against the prior value (one prior) or prior mean (several).
double aggregate(Aggregator agg, std::span<const double> window);

// One vector per event of a single user's stream. Requires the stream to be
// sorted by timestamp and to belong to `profile.user_id`.
std::vector<FeatureVector> extract_features(std::span<const TrackedEvent> stream,
                                            const UserProfile& profile,
                                            const FeatureSchema& schema);

struct ExtractedDataset {
  std::vector<TrackedEvent> events;  // sorted by (user_id, timestamp, event_id)
  std::vector<FeatureVector> vectors;
};

// Groups events by user, sorts each stream and extracts every user's stream.
// The parallel kernel processes users concurrently; the serial reference is
// kept for equivalence tests and benchmarks.
ExtractedDataset extract_dataset(std::vector<TrackedEvent> events,
                                 const std::map<std::string, UserProfile>& profiles,
                                 const FeatureSchema& schema);
ExtractedDataset extract_dataset_serial(std::vector<TrackedEvent> events,
                                        const std::map<std::string, UserProfile>& profiles,
                                        const FeatureSchema& schema);

void to_json(nlohmann::json& j, const FeatureSchema& s);
void from_json(const nlohmann::json& j, FeatureSchema& s);

}  // namespace salient
