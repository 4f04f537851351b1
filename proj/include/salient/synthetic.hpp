#pragma once

// Planted-rule synthetic meal logs for desk-scale experiments.
//
// Annotation streams are sampled from independent per-field marginals,
// features are extracted with a schema, and labels come from a monotone DNF
// rule over those features, flipped at a fixed noise rate.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "salient/dataset.hpp"
#include "salient/domain.hpp"
#include "salient/feature_domain.hpp"

namespace salient {

struct AnnotationMarginals {
  // P(level = Low/Medium/High) per macro.
  std::array<std::array<double, 3>, kMacroCount> macro_levels;
  std::array<double, kFoodGroupCount> food_group_p;
  std::array<double, kCookingMethodCount> cooking_p;
  int ingredient_min = 1;
  int ingredient_max = 10;
  std::array<double, kMealTypeCount> meal_type_p;
  std::array<double, kFrequencyCount> habit_p;

  static AnnotationMarginals defaults();
};

// OR of AND-clauses over feature predicates (column indices into the schema).
struct PlantedRule {
  std::vector<std::vector<Predicate>> clauses;

  bool holds(RowView row) const;
  std::vector<std::size_t> features() const;  // ascending, distinct
  std::string describe(const FeatureSchema& schema) const;
};

// Default-schema rules. Both are monotone and have a base rate near one half
// under the default marginals.
PlantedRule default_manual_rule();
PlantedRule default_auto_rule();

struct SyntheticSpec {
  std::size_t n = 2000;                // events in total
  std::size_t events_per_user = 40;
  double noise_rate = 0.1;             // label flip probability, in [0, 0.5)
  double manual_user_fraction = 0.6;   // share of users in the Manual group
  std::uint64_t seed = 7;
  AnnotationMarginals marginals = AnnotationMarginals::defaults();
  PlantedRule rule = default_manual_rule();
  // When set, Auto-group events are labelled with this rule instead.
  std::optional<PlantedRule> auto_rule;
  FeatureSchema schema = default_schema();

  void validate() const;
};

struct SyntheticDataset {
  std::vector<TrackedEvent> events;  // sorted by (user, timestamp, event_id)
  std::map<std::string, UserProfile> profiles;
  std::vector<FeatureVector> vectors;
  FeatureMatrix X;
  std::vector<FeedbackMode> modes;       // group of each event's user
  std::vector<std::uint8_t> clean_labels;
  std::vector<std::uint8_t> labels;      // after noise
  std::vector<int> ratings;              // consistent with `labels`
  PlantedRule rule;
  std::optional<PlantedRule> auto_rule;

  // Row indices of one mode's events.
  std::vector<std::size_t> rows_for(FeedbackMode mode) const;
};

// Bit-identical output for identical specs.
SyntheticDataset generate_synthetic_dataset(const SyntheticSpec& spec);

// Fraction of rule-satisfying rows in a large noise-free sample.
double estimate_base_rate(const SyntheticSpec& spec, std::size_t n = 200000);

}  // namespace salient
