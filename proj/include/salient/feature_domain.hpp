#pragma once

// Finite value domains and display labels of engineered features, plus the
// predicates anchors and feedback cards are built from.

#include <cstdint>
#include <string>
#include <vector>

#include "salient/dataset.hpp"
#include "salient/features.hpp"

namespace salient {

// Ingredient counts are unbounded; domains enumerate 0..this cap.
inline constexpr int kIngredientDomainCap = 20;

enum class ValueKind : std::uint8_t {
  Boolean,     // current-meal food group / cooking flag
  Ordinal,     // levels, habits, change direction
  Count,       // food group / ingredient counts
  Fraction,    // boolean window means ("3/4")
  Continuous,  // SD, trend, level means
};

ValueKind value_kind(const FeatureSpec& spec);

// Sorted distinct attainable values, including truncated-history windows.
const std::vector<double>& feature_domain(const FeatureSpec& spec);

// "High", "Has", "3/4", "Decreased", "Eats 4-6x/week", ...
std::string value_label(const FeatureSpec& spec, double value);

// Distinct labels of the domain in ascending value order; these are the
// choices a manual elicitation prompt offers.
std::vector<std::string> domain_labels(const FeatureSpec& spec);

enum class CompareOp : std::uint8_t { Ge, Le, Gt, Lt, Eq };

std::string_view to_symbol(CompareOp op);   // "≥", "≤", ">", "<", "="
std::string_view to_token(CompareOp op);    // ">=", "<=", ">", "<", "="
CompareOp parse_compare_op(std::string_view token);

struct Predicate {
  std::size_t feature = 0;
  CompareOp op = CompareOp::Eq;
  double threshold = 0.0;

  bool holds(double v) const;
  bool holds(RowView row) const { return holds(row[feature]); }
  bool operator==(const Predicate&) const = default;
};

// "Meal Macros (Fat level) ≥ High"
std::string render_predicate(const Predicate& p, const FeatureSchema& schema);
// "≥ High"
std::string render_condition(const Predicate& p, const FeatureSpec& spec);

// Domain value closest to the instance value that violates the predicate
// (ties prefer the lower value); std::nullopt if every domain value holds.
std::optional<double> nearest_violation(const Predicate& p, const FeatureSpec& spec, double current);

}  // namespace salient
