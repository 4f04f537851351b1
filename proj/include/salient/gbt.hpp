#pragma once

// Second-order gradient-boosted trees on the logistic loss.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "salient/classifier.hpp"
#include "salient/domain.hpp"
#include "salient/tree.hpp"

namespace salient {

struct TrainConfig {
  int n_trees = 200;
  int max_depth = 4;
  double learning_rate = 0.1;
  double lambda = 1.0;           // L2 on leaf values
  double gamma = 0.0;            // minimum split gain
  double min_child_weight = 1.0; // minimum hessian per child
  double subsample = 1.0;        // row fraction per round
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

inline constexpr int kModelFormatVersion = 1;

class GBTModel final : public Classifier {
 public:
  GBTModel() = default;
  GBTModel(std::vector<Tree> trees, double learning_rate, double base_score, FeedbackMode mode,
           std::string schema_fingerprint, TrainConfig config = {});

  double margin(RowView x) const override;
  const std::string& schema_fingerprint() const override { return fingerprint_; }
  std::string_view kind() const override { return "gbt"; }

  const std::vector<Tree>& trees() const { return trees_; }
  double learning_rate() const { return learning_rate_; }
  double base_score() const { return base_score_; }
  FeedbackMode mode() const { return mode_; }
  const TrainConfig& config() const { return config_; }

  // Total split gain per feature over all trees.
  std::vector<double> feature_gain(std::size_t n_features) const;

 private:
  std::vector<Tree> trees_;
  double learning_rate_ = 0.1;
  double base_score_ = 0.0;
  FeedbackMode mode_ = FeedbackMode::Manual;
  std::string fingerprint_;
  TrainConfig config_;
};

// Greedy exact split search over sorted feature values. Deterministic given
// (X, y, config). Throws TrainingError on empty or single-class data.
GBTModel fit_gbt(const FeatureMatrix& X, std::span<const std::uint8_t> y, const TrainConfig& config,
                 FeedbackMode mode = FeedbackMode::Manual);

// Split gain of partitioning (G, H) into (GL, HL) / (GR, HR).
double split_gain(double GL, double HL, double GR, double HR, double lambda, double gamma);

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);
// Versioned document; loading another format_version throws.
void to_json(nlohmann::json& j, const GBTModel& m);
void from_json(const nlohmann::json& j, GBTModel& m);

}  // namespace salient
