#include "salient/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <nlohmann/json.hpp>

#include "salient/error.hpp"

namespace salient {

double average_precision(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw Error("scores and labels are not aligned");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double hits = 0.0;
  double sum = 0.0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (labels[order[rank]]) {
      hits += 1.0;
      sum += hits / static_cast<double>(rank + 1);
    }
  }
  if (hits == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sum / hits;
}

Metrics compute_metrics(std::span<const double> scores, std::span<const std::uint8_t> labels,
                        double threshold) {
  if (scores.empty()) throw Error("cannot compute metrics on an empty prediction set");
  if (scores.size() != labels.size()) throw Error("scores and labels are not aligned");
  Metrics m;
  auto& c = m.confusion;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    const bool truth = labels[i] != 0;
    if (pred && truth) ++c.tp;
    else if (pred) ++c.fp;
    else if (truth) ++c.fn;
    else ++c.tn;
  }
  const auto n = static_cast<double>(c.total());
  m.accuracy = static_cast<double>(c.tp + c.tn) / n;
  m.precision = c.tp + c.fp > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
  m.recall = c.tp + c.fn > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
  m.f1 = m.precision + m.recall > 0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  m.pr_auc = average_precision(scores, labels);
  m.pr_auc_defined = !std::isnan(m.pr_auc);
  return m;
}

void to_json(nlohmann::json& j, const Metrics& m) {
  j = nlohmann::json{{"accuracy", m.accuracy},
                     {"precision", m.precision},
                     {"recall", m.recall},
                     {"f1", m.f1},
                     {"pr_auc", m.pr_auc_defined ? nlohmann::json(m.pr_auc) : nlohmann::json(nullptr)},
                     {"confusion",
                      {{"tp", m.confusion.tp}, {"fp", m.confusion.fp}, {"tn", m.confusion.tn}, {"fn", m.confusion.fn}}}};
}

}  // namespace salient
