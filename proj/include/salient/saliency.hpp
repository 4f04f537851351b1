#pragma once

// Feedback policy: when to show feedback, which features to include, why
// (rule predicates) and how (Manual elicitation or Auto display).

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "salient/anchors.hpp"
#include "salient/classifier.hpp"
#include "salient/domain.hpp"
#include "salient/shap.hpp"

namespace salient {

struct ModeWeights {
  double manual = 1.0;
  double automatic = 1.2;

  double of(FeedbackMode m) const { return m == FeedbackMode::Manual ? manual : automatic; }
  void validate() const;
};

enum class Decision : std::uint8_t { Show, Skip };
enum class ModePolicy : std::uint8_t { PerFeature, PerEvent };

std::string_view to_token(Decision d);
std::string_view to_token(ModePolicy p);
std::optional<ModePolicy> parse_mode_policy(std::string_view s);

// Indexed by FeedbackMode.
using ModeConfidence = std::array<double, 2>;

struct WhenDecision {
  Decision decision = Decision::Skip;
  ModeConfidence confidence{};
};

Decision decide_when(const ModeConfidence& confidence, double threshold = 0.5);
// Throws SchemaMismatchError unless both models accept the vector's schema.
WhenDecision decide_when(const Classifier& manual, const Classifier& automatic, const FeatureVector& x,
                         double threshold = 0.5);

struct SelectedFeature {
  std::size_t feature = 0;
  double weight = 0.0;  // fused attribution
  FeedbackMode mode = FeedbackMode::Auto;
  std::optional<Predicate> why;

  bool operator==(const SelectedFeature&) const = default;
};

// 1 for features feedback may include; prior habits are not actionable.
std::vector<std::uint8_t> actionable_mask(const FeatureSchema& schema);

// Fused weight max_F(alpha_F * direction * phi_F); features whose fused
// weight is not positive are dropped, as are non-actionable ones. Returns
// at most k features by descending weight (ties: lower index first), each
// assigned the mode with the larger weighted attribution (ties: Auto).
std::vector<SelectedFeature> select_which(std::span<const double> phi_manual, std::span<const double> phi_auto,
                                          const ModeWeights& weights, int k,
                                          std::span<const std::uint8_t> actionable, double direction = 1.0);

// Copies the anchor's predicate onto each selected feature it constrains
// (restricted to features assigned `only_mode` when given); anchor
// predicates on unselected features are dropped.
void attach_why(std::vector<SelectedFeature>& selection, const AnchorRule& anchor,
                std::optional<FeedbackMode> only_mode = std::nullopt);

// Mode with the larger alpha-weighted confidence; ties go to Auto.
FeedbackMode decide_how_event(const ModeConfidence& confidence, const ModeWeights& weights);

struct SaliencyReport {
  std::string event_id;
  Decision decision = Decision::Skip;
  ModeConfidence confidence{};
  std::vector<SelectedFeature> selected;
  int k = 3;
  FeedbackMode event_mode = FeedbackMode::Auto;
};

nlohmann::json report_to_json(const SaliencyReport& r, const FeatureSchema& schema);

struct SaliencyConfig {
  ModeWeights weights;
  int k = 3;
  double threshold = 0.5;
  ModePolicy policy = ModePolicy::PerFeature;
  AnchorConfig anchor;

  void validate() const;
};

// A mode's model with the rows used as SHAP background and anchor
// perturbation source.
struct ModeModel {
  const Classifier* model = nullptr;
  const FeatureMatrix* background = nullptr;
};

struct EventExplanation {
  SaliencyReport report;
  std::array<ShapAttribution, 2> shap;
  std::array<std::optional<AnchorRule>, 2> anchors;
};

// Runs the when/which/why/how chain for one event. Anchors are computed for
// every mode when `all_anchors` is set, otherwise only for modes assigned to
// a selected feature whose model predicts the informative class.
EventExplanation explain_event(const FeatureVector& x, const std::array<ModeModel, 2>& models,
                               const FeatureSchema& schema, const SaliencyConfig& config,
                               bool all_anchors = false);

SaliencyReport build_report(const FeatureVector& x, const std::array<ModeModel, 2>& models,
                            const FeatureSchema& schema, const SaliencyConfig& config);

}  // namespace salient
