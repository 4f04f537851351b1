#pragma once

// Interventional Shapley attributions in margin (log-odds) space.
//
// The value of a coalition S is the mean, over background rows z, of the
// model margin on the composite row taking features in S (value and mask)
// from x and the rest from z. phi_0 is the mean background margin, so
// phi_0 + sum(phi) equals margin(x).

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "salient/classifier.hpp"
#include "salient/gbt.hpp"

namespace salient {

struct ShapAttribution {
  std::string event_id;
  double base_value = 0.0;  // phi_0
  std::vector<double> phi;

  double total() const;  // phi_0 + sum(phi)
};

inline constexpr std::size_t kMaxBruteForceFeatures = 15;

// Exact subset enumeration; any classifier, at most 15 features.
ShapAttribution shap_bruteforce(const Classifier& model, RowView x, const FeatureMatrix& background);

// Polynomial-time per-tree recursion for additive tree ensembles; equals the
// subset enumeration on the same background.
ShapAttribution shap_tree(const GBTModel& model, RowView x, const FeatureMatrix& background);

// Tree recursion for boosted ensembles, subset enumeration otherwise.
ShapAttribution explain_shap(const Classifier& model, RowView x, const FeatureMatrix& background);

// One attribution per row of X. The parallel kernel splits rows across
// threads; the serial reference is kept for tests and benchmarks.
std::vector<ShapAttribution> shap_batch(const Classifier& model, const FeatureMatrix& X,
                                        const FeatureMatrix& background);
std::vector<ShapAttribution> shap_batch_serial(const Classifier& model, const FeatureMatrix& X,
                                               const FeatureMatrix& background);

// Uniform seeded subsample of at most `cap` rows, kept in original order.
FeatureMatrix sample_background(const FeatureMatrix& X, std::size_t cap = 256, std::uint64_t seed = 0);

struct GlobalShapSummary {
  std::vector<std::string> features;
  FeatureMatrix values;                    // instance values, one row per instance
  std::vector<ShapAttribution> attributions;
  std::vector<double> mean_abs_phi;        // per feature
  std::vector<int> rank;                   // 1 + number of features with larger mean |phi|
};

GlobalShapSummary global_shap_summary(const Classifier& model, const FeatureMatrix& X,
                                      const FeatureMatrix& background, const FeatureSchema& schema);

// "feature,value,phi" rows, instance-major.
void write_global_shap_csv(std::ostream& out, const GlobalShapSummary& summary);

void to_json(nlohmann::json& j, const ShapAttribution& a);

}  // namespace salient
