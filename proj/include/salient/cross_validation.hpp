#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "salient/baselines.hpp"
#include "salient/gbt.hpp"
#include "salient/metrics.hpp"

namespace salient {

enum class ModelKind { GBT, LogReg, DecisionTree, RandomForest };

std::string_view to_token(ModelKind k);

struct ModelSpec {
  ModelKind kind = ModelKind::GBT;
  TrainConfig gbt;
  BaselineConfig baseline;
};

std::unique_ptr<Classifier> fit_model(const ModelSpec& spec, const FeatureMatrix& X,
                                      std::span<const std::uint8_t> y);

// Fold id per row. Each class is shuffled with the seed and dealt round-robin,
// so per-fold class counts differ by at most one.
std::vector<int> stratified_folds(std::span<const std::uint8_t> labels, int k, std::uint64_t seed);

struct CvReport {
  Metrics pooled;                 // on all out-of-fold predictions
  Metrics fold_mean;              // field-wise mean over folds
  std::vector<Metrics> per_fold;
  std::vector<double> oof_scores;
  std::vector<int> folds;
};

// Folds train concurrently; every fold writes only its own slots, so the
// report is identical to the serial reference.
CvReport cross_validate(const FeatureMatrix& X, std::span<const std::uint8_t> y,
                        const ModelSpec& spec, int k = 5, std::uint64_t seed = 0,
                        double threshold = 0.5);
CvReport cross_validate_serial(const FeatureMatrix& X, std::span<const std::uint8_t> y,
                               const ModelSpec& spec, int k = 5, std::uint64_t seed = 0,
                               double threshold = 0.5);

void to_json(nlohmann::json& j, const CvReport& r);

}  // namespace salient
