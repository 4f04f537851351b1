#include "salient/selection.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>

#include "salient/error.hpp"

namespace salient {

namespace {

void check_target(const FeatureMatrix& X, std::span<const std::uint8_t> y, int target_k) {
  if (target_k <= 0 || static_cast<std::size_t>(target_k) > X.cols()) {
    throw Error("target_k must be in 1.." + std::to_string(X.cols()) + ", got " +
                std::to_string(target_k));
  }
  if (y.size() != X.rows()) throw Error("label count does not match row count");
}

double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted[lo];
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

std::vector<int> quartile_bins(std::span<const double> column) {
  std::vector<int> bins(column.size(), 0);
  if (column.empty()) return bins;
  std::vector<double> sorted(column.begin(), column.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> cuts;
  for (double q : {0.25, 0.5, 0.75}) {
    const double c = quantile(sorted, q);
    if (cuts.empty() || c > cuts.back()) cuts.push_back(c);
  }
  for (std::size_t i = 0; i < column.size(); ++i) {
    bins[i] = static_cast<int>(std::count_if(cuts.begin(), cuts.end(), [&](double c) { return column[i] > c; }));
  }
  return bins;
}

double mutual_information_bits(std::span<const int> bins, std::span<const std::uint8_t> labels) {
  if (bins.size() != labels.size()) throw Error("bins and labels are not aligned");
  if (bins.empty()) return 0.0;
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> px;
  std::array<double, 2> py{0.0, 0.0};
  for (std::size_t i = 0; i < bins.size(); ++i) {
    const int yi = labels[i] ? 1 : 0;
    joint[{bins[i], yi}] += 1.0;
    px[bins[i]] += 1.0;
    py[static_cast<std::size_t>(yi)] += 1.0;
  }
  const auto n = static_cast<double>(bins.size());
  double mi = 0.0;
  for (const auto& [key, count] : joint) {
    const double pxy = count / n;
    const double pxv = px[key.first] / n;
    const double pyv = py[static_cast<std::size_t>(key.second)] / n;
    mi += pxy * std::log(pxy / (pxv * pyv));
  }
  return std::max(0.0, mi / std::log(2.0));
}

std::vector<std::size_t> select_features_mi(const FeatureMatrix& X, std::span<const std::uint8_t> y,
                                            int target_k) {
  check_target(X, y, target_k);
  std::vector<double> mi(X.cols());
  for (std::size_t j = 0; j < X.cols(); ++j) {
    const auto col = X.column(j);
    mi[j] = mutual_information_bits(quartile_bins(col), y);
  }
  std::vector<std::size_t> order(X.cols());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return mi[a] > mi[b]; });
  order.resize(static_cast<std::size_t>(target_k));
  std::sort(order.begin(), order.end());
  return order;
}

std::vector<std::size_t> select_features_rfe(const FeatureMatrix& X, std::span<const std::uint8_t> y,
                                             int target_k, const TrainConfig& config) {
  check_target(X, y, target_k);
  std::vector<std::size_t> remaining(X.cols());
  std::iota(remaining.begin(), remaining.end(), std::size_t{0});
  const auto target = static_cast<std::size_t>(target_k);
  while (remaining.size() > target) {
    const auto Xsub = X.select_columns(remaining, X.fingerprint());
    const auto model = fit_gbt(Xsub, y, config);
    const auto gain = model.feature_gain(remaining.size());
    std::size_t step = std::max<std::size_t>(1, remaining.size() / 10);
    step = std::min(step, remaining.size() - target);
    std::vector<std::size_t> pos(remaining.size());
    std::iota(pos.begin(), pos.end(), std::size_t{0});
    // Lowest gain first; among equal gains drop the later column.
    std::sort(pos.begin(), pos.end(), [&](std::size_t a, std::size_t b) {
      if (gain[a] != gain[b]) return gain[a] < gain[b];
      return a > b;
    });
    std::vector<char> drop(remaining.size(), 0);
    for (std::size_t s = 0; s < step; ++s) drop[pos[s]] = 1;
    std::vector<std::size_t> next;
    for (std::size_t p = 0; p < remaining.size(); ++p) {
      if (!drop[p]) next.push_back(remaining[p]);
    }
    remaining = std::move(next);
  }
  return remaining;
}

FeatureSchema select_schema_mi(const FeatureSchema& schema, const FeatureMatrix& X,
                               std::span<const std::uint8_t> y, int target_k) {
  return schema.subset(select_features_mi(X, y, target_k));
}

FeatureSchema select_schema_rfe(const FeatureSchema& schema, const FeatureMatrix& X,
                                std::span<const std::uint8_t> y, int target_k,
                                const TrainConfig& config) {
  return schema.subset(select_features_rfe(X, y, target_k, config));
}

}  // namespace salient
