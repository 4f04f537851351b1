#pragma once

// Comparison classifiers sharing the Classifier contract: L2 logistic
// regression (Newton), a single Gini CART and a bagged random forest.

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "salient/classifier.hpp"
#include "salient/tree.hpp"

namespace salient {

enum class BaselineKind { LogReg, DecisionTree, RandomForest };

std::string_view to_token(BaselineKind k);

struct BaselineConfig {
  double logreg_lambda = 1.0;
  int logreg_max_iter = 100;
  int tree_max_depth = 6;
  int forest_trees = 100;
  int forest_max_depth = 8;
  int max_features = 0;  // per split for forests; 0 = round(sqrt(M))
  bool bootstrap = true;
  int min_samples_leaf = 1;
  std::uint64_t seed = 0;
};

// Probabilities are clamped to [kProbFloor, 1 - kProbFloor] so margins stay finite.
inline constexpr double kProbFloor = 1e-6;

class LogisticModel final : public Classifier {
 public:
  LogisticModel(std::vector<double> weights, double bias, std::vector<double> mean,
                std::vector<double> scale, std::string fingerprint);
  double margin(RowView x) const override;
  const std::string& schema_fingerprint() const override { return fingerprint_; }
  std::string_view kind() const override { return "logreg"; }
  const std::vector<double>& weights() const { return weights_; }

 private:
  std::vector<double> weights_;
  double bias_;
  std::vector<double> mean_;
  std::vector<double> scale_;
  std::string fingerprint_;
};

// One CART or a forest of them; leaves hold the positive-class frequency.
class TreeVoteModel final : public Classifier {
 public:
  TreeVoteModel(std::vector<Tree> trees, std::string fingerprint, std::string_view kind);
  double probability(RowView x) const override;
  double margin(RowView x) const override { return logit(probability(x)); }
  const std::string& schema_fingerprint() const override { return fingerprint_; }
  std::string_view kind() const override { return kind_; }
  const std::vector<Tree>& trees() const { return trees_; }

 private:
  std::vector<Tree> trees_;
  std::string fingerprint_;
  std::string kind_;
};

LogisticModel fit_logreg(const FeatureMatrix& X, std::span<const std::uint8_t> y,
                         const BaselineConfig& config);

// Gini CART over the given rows. `max_features` 0 means all features.
Tree fit_cart(const FeatureMatrix& X, std::span<const std::uint8_t> y,
              std::span<const std::uint32_t> rows, int max_depth, int min_samples_leaf,
              int max_features, std::uint64_t seed);

std::unique_ptr<Classifier> fit_baseline(BaselineKind kind, const FeatureMatrix& X,
                                         std::span<const std::uint8_t> y,
                                         const BaselineConfig& config);

}  // namespace salient
