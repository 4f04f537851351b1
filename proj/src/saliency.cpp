#include "salient/saliency.hpp"

#include <algorithm>
#include <numeric>

#include <nlohmann/json.hpp>

#include "salient/error.hpp"

namespace salient {

namespace {

std::size_t idx(FeedbackMode m) { return static_cast<std::size_t>(m); }

void check_models(const std::array<ModeModel, 2>& models) {
  for (const auto& m : models) {
    if (!m.model || !m.background) throw Error("both feedback modes need a model and a background set");
  }
}

}  // namespace

void ModeWeights::validate() const {
  if (!(manual >= 0.0) || !(automatic >= 0.0)) throw Error("mode weights must be non-negative");
  if (manual == 0.0 && automatic == 0.0) throw Error("mode weights cannot both be zero");
}

std::string_view to_token(Decision d) { return d == Decision::Show ? "show" : "skip"; }

std::string_view to_token(ModePolicy p) { return p == ModePolicy::PerFeature ? "per_feature" : "per_event"; }

std::optional<ModePolicy> parse_mode_policy(std::string_view s) {
  if (s == "per_feature") return ModePolicy::PerFeature;
  if (s == "per_event") return ModePolicy::PerEvent;
  return std::nullopt;
}

Decision decide_when(const ModeConfidence& confidence, double threshold) {
  return std::max(confidence[0], confidence[1]) >= threshold ? Decision::Show : Decision::Skip;
}

WhenDecision decide_when(const Classifier& manual, const Classifier& automatic, const FeatureVector& x,
                         double threshold) {
  WhenDecision w;
  w.confidence[idx(FeedbackMode::Manual)] = predict_proba(manual, x);
  w.confidence[idx(FeedbackMode::Auto)] = predict_proba(automatic, x);
  w.decision = decide_when(w.confidence, threshold);
  return w;
}

std::vector<std::uint8_t> actionable_mask(const FeatureSchema& schema) {
  std::vector<std::uint8_t> out(schema.size(), 1);
  for (std::size_t j = 0; j < schema.size(); ++j) {
    if (schema[j].base.kind == BaseKind::PriorHabit) out[j] = 0;
  }
  return out;
}

std::vector<SelectedFeature> select_which(std::span<const double> phi_manual, std::span<const double> phi_auto,
                                          const ModeWeights& weights, int k,
                                          std::span<const std::uint8_t> actionable, double direction) {
  if (k <= 0) throw Error("k must be positive, got " + std::to_string(k));
  weights.validate();
  if (phi_manual.size() != phi_auto.size() || actionable.size() != phi_manual.size()) {
    throw SchemaMismatchError("attributions are not aligned to one schema");
  }
  std::vector<SelectedFeature> pool;
  for (std::size_t j = 0; j < phi_manual.size(); ++j) {
    if (!actionable[j]) continue;
    const double wm = weights.manual * direction * phi_manual[j];
    const double wa = weights.automatic * direction * phi_auto[j];
    const double fused = std::max(wm, wa);
    if (!(fused > 0.0)) continue;
    pool.push_back({j, fused, wm > wa ? FeedbackMode::Manual : FeedbackMode::Auto, std::nullopt});
  }
  std::stable_sort(pool.begin(), pool.end(),
                   [](const SelectedFeature& a, const SelectedFeature& b) { return a.weight > b.weight; });
  if (pool.size() > static_cast<std::size_t>(k)) pool.resize(static_cast<std::size_t>(k));
  return pool;
}

void attach_why(std::vector<SelectedFeature>& selection, const AnchorRule& anchor,
                std::optional<FeedbackMode> only_mode) {
  for (auto& s : selection) {
    if (only_mode && s.mode != *only_mode) continue;
    if (const auto* p = anchor.predicate_for(s.feature)) s.why = *p;
  }
}

FeedbackMode decide_how_event(const ModeConfidence& confidence, const ModeWeights& weights) {
  const double m = weights.manual * confidence[idx(FeedbackMode::Manual)];
  const double a = weights.automatic * confidence[idx(FeedbackMode::Auto)];
  return m > a ? FeedbackMode::Manual : FeedbackMode::Auto;
}

nlohmann::json report_to_json(const SaliencyReport& r, const FeatureSchema& schema) {
  nlohmann::json selected = nlohmann::json::array();
  for (const auto& s : r.selected) {
    const auto& spec = schema[s.feature];
    nlohmann::json why = nullptr;
    if (s.why) {
      why = {{"op", std::string(to_token(s.why->op))},
             {"threshold", s.why->threshold},
             {"text", render_condition(*s.why, spec)}};
    }
    selected.push_back({{"feature", spec.name},
                        {"index", s.feature},
                        {"weight", s.weight},
                        {"mode", std::string(to_token(s.mode))},
                        {"why", why}});
  }
  return {{"event_id", r.event_id},
          {"decision", std::string(to_token(r.decision))},
          {"confidence",
           {{"manual", r.confidence[idx(FeedbackMode::Manual)]}, {"auto", r.confidence[idx(FeedbackMode::Auto)]}}},
          {"k", r.k},
          {"event_mode", std::string(to_token(r.event_mode))},
          {"selected", selected}};
}

void SaliencyConfig::validate() const {
  weights.validate();
  if (k <= 0) throw Error("k must be positive");
  if (!(threshold > 0.0 && threshold < 1.0)) throw Error("threshold must be in (0, 1)");
  anchor.validate();
}

namespace {

EventExplanation run_chain(const FeatureVector& x, const std::array<ModeModel, 2>& models,
                           const FeatureSchema& schema, const SaliencyConfig& config, bool always_shap,
                           bool all_anchors) {
  config.validate();
  check_models(models);
  if (x.values.size() != schema.size()) throw SchemaMismatchError("feature vector width does not match the schema");
  EventExplanation out;
  auto& r = out.report;
  r.event_id = x.event_id;
  r.k = config.k;
  const auto when = decide_when(*models[0].model, *models[1].model, x, config.threshold);
  r.decision = when.decision;
  r.confidence = when.confidence;
  r.event_mode = decide_how_event(r.confidence, config.weights);

  const auto row = view_of(x);
  if (r.decision == Decision::Show || always_shap) {
    for (auto m : kAllModes) {
      out.shap[idx(m)] = explain_shap(*models[idx(m)].model, row, *models[idx(m)].background);
      out.shap[idx(m)].event_id = x.event_id;
    }
  }
  if (r.decision == Decision::Show) {
    const auto actionable = actionable_mask(schema);
    r.selected = select_which(out.shap[0].phi, out.shap[1].phi, config.weights, config.k, actionable);
    if (config.policy == ModePolicy::PerEvent) {
      for (auto& s : r.selected) s.mode = r.event_mode;
    }
  }
  for (auto m : kAllModes) {
    const bool assigned = std::any_of(r.selected.begin(), r.selected.end(),
                                      [&](const SelectedFeature& s) { return s.mode == m; });
    // A mode whose model predicts the uninformative class would justify the
    // opposite outcome, so its rule is not used as a reason to show.
    const bool supports = r.confidence[idx(m)] > 0.5;
    if (!all_anchors && !(assigned && supports)) continue;
    out.anchors[idx(m)] = find_anchor(*models[idx(m)].model, row, *models[idx(m)].background, schema, config.anchor);
    if (assigned && supports) attach_why(r.selected, *out.anchors[idx(m)], m);
  }
  return out;
}

}  // namespace

EventExplanation explain_event(const FeatureVector& x, const std::array<ModeModel, 2>& models,
                               const FeatureSchema& schema, const SaliencyConfig& config, bool all_anchors) {
  return run_chain(x, models, schema, config, true, all_anchors);
}

SaliencyReport build_report(const FeatureVector& x, const std::array<ModeModel, 2>& models,
                            const FeatureSchema& schema, const SaliencyConfig& config) {
  return run_chain(x, models, schema, config, false, false).report;
}

}  // namespace salient
