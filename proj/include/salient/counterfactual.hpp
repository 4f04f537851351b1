#pragma once

// Signed prediction-confidence change: how much confidence in the predicted
// class drops when one feature is pushed just past its rule threshold.

#include "salient/anchors.hpp"
#include "salient/classifier.hpp"
#include "salient/feature_domain.hpp"

namespace salient {

// Copy of x with `feature` moved to the nearest domain value violating the
// predicate (unmasked). Throws Error when no domain value violates it.
RowBuffer counterfactual_row(RowView x, const Predicate& rule, const FeatureSchema& schema);

// y * (p - p') with y = +1 when p > 0.5, else -1. Positive values mean the
// perturbation moved confidence away from the predicted class.
double signed_confidence_change(const Classifier& model, RowView x, const Predicate& rule,
                                const FeatureSchema& schema);

// Rule for a feature that has no anchor predicate: "= v" for booleans,
// otherwise ">= v" when v is at or above `reference` (typically the
// background mean) and "<= v" below it, switching direction when the
// preferred one admits no violating value.
Predicate instance_predicate(RowView x, std::size_t feature, const FeatureSchema& schema, double reference);

// Anchor predicate for the feature if present, else the instance predicate.
Predicate rule_for_feature(const AnchorRule* anchor, RowView x, std::size_t feature,
                           const FeatureSchema& schema, double reference);

}  // namespace salient
