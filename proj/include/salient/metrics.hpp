#pragma once

#include <cstdint>
#include <span>

#include <nlohmann/json_fwd.hpp>

namespace salient {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // Average precision; NaN (pr_auc_defined = false) when there are no positives.
  double pr_auc = 0.0;
  bool pr_auc_defined = true;
  ConfusionCounts confusion;
};

// Scores >= threshold are predicted positive. Average precision ranks by
// descending score with ties kept in input order.
Metrics compute_metrics(std::span<const double> scores, std::span<const std::uint8_t> labels,
                        double threshold = 0.5);

double average_precision(std::span<const double> scores, std::span<const std::uint8_t> labels);

void to_json(nlohmann::json& j, const Metrics& m);

}  // namespace salient
