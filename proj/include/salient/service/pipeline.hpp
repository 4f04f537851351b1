#pragma once

// Training, explanation and feedback pipelines on top of the store.
//
// Model files live under <data_dir>/models: manual.json, auto.json and
// cv_report.json, each carrying a format_version. A model file holds the
// schema, the boosted trees and the background rows used for SHAP and as the
// anchor perturbation source.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "salient/cross_validation.hpp"
#include "salient/error.hpp"
#include "salient/feedback.hpp"
#include "salient/gbt.hpp"
#include "salient/saliency.hpp"
#include "salient/service/config.hpp"
#include "salient/service/store.hpp"

namespace salient::service {

inline constexpr int kModelFileVersion = 1;

// No usable model for the request (HTTP 409).
class ModelUnavailableError : public Error {
 public:
  using Error::Error;
};

// Elicitation answer outside the feature's domain (HTTP 422).
class AnswerOutsideDomainError : public Error {
 public:
  AnswerOutsideDomainError(const std::string& feature, const std::string& answer, std::vector<std::string> allowed);
  const std::vector<std::string>& allowed() const noexcept { return allowed_; }

 private:
  std::vector<std::string> allowed_;
};

struct ModeArtifact {
  GBTModel model;
  FeatureMatrix background;
};

struct ModelBundle {
  FeatureSchema schema;
  std::array<std::optional<ModeArtifact>, 2> modes;

  bool complete() const { return modes[0].has_value() && modes[1].has_value(); }
  // Throws ModelUnavailableError unless both modes are present.
  std::array<ModeModel, 2> views() const;
};

struct TrainingSet {
  FeatureMatrix X;
  std::vector<std::uint8_t> y;
  std::vector<std::string> event_ids;
};

// Per-mode training rows. Stored labels come first; the latest elicitation
// rating of an event becomes its Manual label when no Manual label was
// ingested. Events of users without a profile are left out with a warning
// when the schema reads prior habits.
std::array<TrainingSet, 2> training_sets(const StoreSnapshot& snapshot, const FeatureSchema& schema,
                                         std::vector<std::string>* warnings = nullptr);

struct ModeTrainReport {
  FeedbackMode mode = FeedbackMode::Manual;
  std::size_t rows = 0;
  std::size_t positives = 0;
  bool trained = false;
  std::optional<std::string> skipped;      // reason when not trained
  std::map<std::string, CvReport> cv;      // by model kind token
};

struct TrainReport {
  FeatureSchema schema;
  std::vector<std::string> warnings;
  std::array<ModeTrainReport, 2> modes;

  bool any_trained() const { return modes[0].trained || modes[1].trained; }
};

nlohmann::json report_to_json(const TrainReport& report, bool include_folds = false);

struct TrainResult {
  TrainReport report;
  std::shared_ptr<const ModelBundle> bundle;  // null when nothing was trained
};

// extract -> select -> fit per mode -> k-fold CV. Modes below the row floor
// (or with a single class) are skipped with a warning. Baselines are
// cross-validated alongside GBT when `with_baselines` is set.
TrainResult train_models(const StoreSnapshot& snapshot, const ServiceConfig& config, bool with_baselines = true);

// Writes models/{manual,auto}.json and models/cv_report.json. Each file is
// written to a temporary name and renamed into place.
void save_models(const TrainResult& result, const std::filesystem::path& data_dir);

// Null when no model file exists; throws Error on a version or schema mismatch.
std::shared_ptr<const ModelBundle> load_models(const std::filesystem::path& data_dir);

nlohmann::json mode_artifact_to_json(const ModeArtifact& artifact, const FeatureSchema& schema);

// Feature vector of a stored event, extracted over its user's full stream.
FeatureVector event_features(const Store& store, const FeatureSchema& schema, const std::string& event_id);

EventExplanation explain_stored_event(const Store& store, const ModelBundle& bundle, const std::string& event_id,
                                      const SaliencyConfig& config, bool all_anchors = false);

nlohmann::json explanation_to_json(const EventExplanation& e, const FeatureSchema& schema);

// The event's salient card, or its full card (every schema feature) when
// `expand_full` is set.
FeedbackCard event_card(const Store& store, const ModelBundle& bundle, const std::string& event_id,
                        const SaliencyConfig& config, bool expand_full = false);

struct WeeklyFeedback {
  std::string user_id;
  std::string week;  // ISO week, "2021-W09"
  std::vector<FeedbackCard> cards;
};

// Cards for the user's events in one ISO week, in time order; Skip events
// appear as omitted stubs. Defaults to the week of the latest event.
WeeklyFeedback weekly_feedback(const Store& store, const ModelBundle& bundle, const std::string& user_id,
                               const std::optional<std::string>& week, const SaliencyConfig& config);

nlohmann::json feedback_to_json(const WeeklyFeedback& f);

// Checks the event and user exist and that the answer is one of the
// feature's choices, then appends the record. `schema` is the one prompts
// were generated from.
std::int64_t record_elicitation(Store& store, const FeatureSchema& schema, const ElicitationRecord& record);

// Global SHAP summary of one mode over its background rows, as CSV.
void write_global_shap(std::ostream& out, const ModelBundle& bundle, FeedbackMode mode);

struct SimulateOptions {
  std::uint64_t seed = 7;
  std::size_t n = 2000;
  double noise = 0.1;
};

// Generates the planted-rule dataset, ingests it into the store under
// config.data_dir, trains and saves the per-mode models, and reports the
// learner-capability metrics on the full dataset. The result contains no
// paths or timings, so equal inputs give equal output.
nlohmann::json simulate(const ServiceConfig& config, const SimulateOptions& options);

}  // namespace salient::service
