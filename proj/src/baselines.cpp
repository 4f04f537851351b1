#include "salient/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "salient/error.hpp"
#include "salient/random.hpp"

namespace salient {

namespace {

void check_training_data(const FeatureMatrix& X, std::span<const std::uint8_t> y) {
  if (X.rows() == 0 || X.cols() == 0) throw TrainingError("cannot fit on an empty feature matrix");
  if (y.size() != X.rows()) throw TrainingError("label count does not match row count");
  const auto pos = std::count_if(y.begin(), y.end(), [](auto v) { return v != 0; });
  if (pos == 0 || static_cast<std::size_t>(pos) == y.size()) {
    throw TrainingError("training labels contain a single class");
  }
}

double clamp_prob(double p) { return std::clamp(p, kProbFloor, 1.0 - kProbFloor); }

double gini(double pos, double n) {
  if (n <= 0) return 0.0;
  const double p = pos / n;
  return 2.0 * p * (1.0 - p);
}

struct CartBuilder {
  const FeatureMatrix& X;
  std::span<const std::uint8_t> y;
  int max_depth;
  int min_samples_leaf;
  int max_features;
  Rng rng;
  Tree tree;

  int grow(std::vector<std::uint32_t> rows, int depth) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    double pos = 0;
    for (auto r : rows) pos += y[r] ? 1.0 : 0.0;
    const double n = static_cast<double>(rows.size());
    tree.nodes[static_cast<std::size_t>(id)].value = n > 0 ? pos / n : 0.0;
    if (depth >= max_depth || pos == 0 || pos == n || rows.size() < 2u * static_cast<std::size_t>(min_samples_leaf)) {
      return id;
    }

    std::vector<std::size_t> features(X.cols());
    std::iota(features.begin(), features.end(), std::size_t{0});
    if (max_features > 0 && static_cast<std::size_t>(max_features) < features.size()) {
      // Partial Fisher-Yates; keep the draw in ascending order for stable tie-breaks.
      for (std::size_t i = 0; i < static_cast<std::size_t>(max_features); ++i) {
        std::swap(features[i], features[i + rng.below(features.size() - i)]);
      }
      features.resize(static_cast<std::size_t>(max_features));
      std::sort(features.begin(), features.end());
    }

    const double parent = gini(pos, n);
    double best_gain = 1e-12;
    int best_feature = -1;
    double best_threshold = 0.0;
    bool best_default_left = true;
    std::vector<std::uint32_t> sorted;
    for (auto f : features) {
      sorted.clear();
      double masked_pos = 0, masked_n = 0;
      for (auto r : rows) {
        if (X.is_masked(r, f)) {
          masked_n += 1;
          masked_pos += y[r] ? 1.0 : 0.0;
        } else {
          sorted.push_back(r);
        }
      }
      std::stable_sort(sorted.begin(), sorted.end(),
                       [&](auto a, auto b) { return X.value(a, f) < X.value(b, f); });
      const double un_n = static_cast<double>(sorted.size());
      const double un_pos = pos - masked_pos;
      double l_n = 0, l_pos = 0;
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        l_n += 1;
        l_pos += y[sorted[i]] ? 1.0 : 0.0;
        const double v = X.value(sorted[i], f);
        const double next = X.value(sorted[i + 1], f);
        if (!(next > v)) continue;
        const double r_n = un_n - l_n;
        const double r_pos = un_pos - l_pos;
        auto eval = [&](double ln, double lp, double rn, double rp) -> double {
          if (ln < min_samples_leaf || rn < min_samples_leaf) return -INFINITY;
          return parent - (ln * gini(lp, ln) + rn * gini(rp, rn)) / n;
        };
        const double gl = eval(l_n + masked_n, l_pos + masked_pos, r_n, r_pos);
        const double gr = eval(l_n, l_pos, r_n + masked_n, r_pos + masked_pos);
        const bool to_left = gl >= gr;
        const double g = to_left ? gl : gr;
        if (g > best_gain) {
          best_gain = g;
          best_feature = static_cast<int>(f);
          best_threshold = 0.5 * (v + next);
          best_default_left = to_left;
        }
      }
    }
    if (best_feature < 0) return id;

    TreeNode split;
    split.feature = best_feature;
    split.threshold = best_threshold;
    split.default_left = best_default_left;
    split.gain = best_gain * n;
    std::vector<std::uint32_t> left_rows, right_rows;
    for (auto r : rows) {
      (split.goes_left(X.row(r)) ? left_rows : right_rows).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    split.left = grow(std::move(left_rows), depth + 1);
    split.right = grow(std::move(right_rows), depth + 1);
    split.value = tree.nodes[static_cast<std::size_t>(id)].value;
    tree.nodes[static_cast<std::size_t>(id)] = split;
    return id;
  }
};

}  // namespace

std::string_view to_token(BaselineKind k) {
  switch (k) {
    case BaselineKind::LogReg: return "logreg";
    case BaselineKind::DecisionTree: return "decision_tree";
    case BaselineKind::RandomForest: return "random_forest";
  }
  return "?";
}

LogisticModel::LogisticModel(std::vector<double> weights, double bias, std::vector<double> mean,
                             std::vector<double> scale, std::string fingerprint)
    : weights_(std::move(weights)),
      bias_(bias),
      mean_(std::move(mean)),
      scale_(std::move(scale)),
      fingerprint_(std::move(fingerprint)) {}

double LogisticModel::margin(RowView x) const {
  double z = bias_;
  for (std::size_t j = 0; j < weights_.size(); ++j) z += weights_[j] * (x[j] - mean_[j]) / scale_[j];
  const double limit = logit(1.0 - kProbFloor);
  return std::clamp(z, -limit, limit);
}

TreeVoteModel::TreeVoteModel(std::vector<Tree> trees, std::string fingerprint, std::string_view kind)
    : trees_(std::move(trees)), fingerprint_(std::move(fingerprint)), kind_(kind) {}

double TreeVoteModel::probability(RowView x) const {
  double sum = 0.0;
  for (const auto& t : trees_) sum += t.evaluate(x);
  return clamp_prob(sum / static_cast<double>(trees_.size()));
}

LogisticModel fit_logreg(const FeatureMatrix& X, std::span<const std::uint8_t> y,
                         const BaselineConfig& config) {
  check_training_data(X, y);
  const auto n = static_cast<Eigen::Index>(X.rows());
  const auto m = static_cast<Eigen::Index>(X.cols());
  std::vector<double> mean(X.cols(), 0.0), scale(X.cols(), 1.0);
  for (std::size_t j = 0; j < X.cols(); ++j) {
    double mu = 0.0;
    for (std::size_t i = 0; i < X.rows(); ++i) mu += X.value(i, j);
    mu /= static_cast<double>(X.rows());
    double var = 0.0;
    for (std::size_t i = 0; i < X.rows(); ++i) var += (X.value(i, j) - mu) * (X.value(i, j) - mu);
    var /= static_cast<double>(X.rows());
    mean[j] = mu;
    scale[j] = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
  // Column 0 is the intercept.
  Eigen::MatrixXd Z(n, m + 1);
  Eigen::VectorXd t(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Z(i, 0) = 1.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      Z(i, j + 1) = (X.value(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) - mean[static_cast<std::size_t>(j)]) /
                    scale[static_cast<std::size_t>(j)];
    }
    t(i) = y[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
  }
  Eigen::VectorXd w = Eigen::VectorXd::Zero(m + 1);
  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(m + 1, config.logreg_lambda);
  penalty(0) = 0.0;
  for (int iter = 0; iter < config.logreg_max_iter; ++iter) {
    const Eigen::VectorXd z = Z * w;
    Eigen::VectorXd p(n), s(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      p(i) = logistic(z(i));
      s(i) = std::max(p(i) * (1.0 - p(i)), 1e-12);
    }
    const Eigen::VectorXd grad = Z.transpose() * (p - t) + penalty.cwiseProduct(w);
    Eigen::MatrixXd hess = Z.transpose() * s.asDiagonal() * Z;
    hess.diagonal() += penalty;
    hess.diagonal().array() += 1e-10;
    const Eigen::VectorXd step = hess.ldlt().solve(grad);
    w -= step;
    if (step.norm() < 1e-10) break;
  }
  std::vector<double> weights(static_cast<std::size_t>(m));
  for (Eigen::Index j = 0; j < m; ++j) weights[static_cast<std::size_t>(j)] = w(j + 1);
  return LogisticModel(std::move(weights), w(0), std::move(mean), std::move(scale), X.fingerprint());
}

Tree fit_cart(const FeatureMatrix& X, std::span<const std::uint8_t> y,
              std::span<const std::uint32_t> rows, int max_depth, int min_samples_leaf,
              int max_features, std::uint64_t seed) {
  CartBuilder b{X, y, max_depth, std::max(1, min_samples_leaf), max_features, Rng(seed), {}};
  b.grow(std::vector<std::uint32_t>(rows.begin(), rows.end()), 0);
  return std::move(b.tree);
}

std::unique_ptr<Classifier> fit_baseline(BaselineKind kind, const FeatureMatrix& X,
                                         std::span<const std::uint8_t> y,
                                         const BaselineConfig& config) {
  check_training_data(X, y);
  switch (kind) {
    case BaselineKind::LogReg: return std::make_unique<LogisticModel>(fit_logreg(X, y, config));
    case BaselineKind::DecisionTree: {
      std::vector<std::uint32_t> rows(X.rows());
      std::iota(rows.begin(), rows.end(), 0u);
      std::vector<Tree> trees{
          fit_cart(X, y, rows, config.tree_max_depth, config.min_samples_leaf, 0, config.seed)};
      return std::make_unique<TreeVoteModel>(std::move(trees), X.fingerprint(), "decision_tree");
    }
    case BaselineKind::RandomForest: {
      if (config.forest_trees < 1) throw TrainingError("forest_trees must be >= 1");
      const int max_features =
          config.max_features > 0
              ? config.max_features
              : std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(X.cols())))));
      Rng rng(config.seed);
      std::vector<Tree> trees;
      std::vector<std::uint32_t> rows(X.rows());
      for (int t = 0; t < config.forest_trees; ++t) {
        Rng tree_rng = rng.fork(static_cast<std::uint64_t>(t));
        if (config.bootstrap) {
          for (auto& r : rows) r = static_cast<std::uint32_t>(tree_rng.below(X.rows()));
          std::sort(rows.begin(), rows.end());
        } else {
          std::iota(rows.begin(), rows.end(), 0u);
        }
        trees.push_back(fit_cart(X, y, rows, config.forest_max_depth, config.min_samples_leaf,
                                 max_features, tree_rng.next()));
      }
      return std::make_unique<TreeVoteModel>(std::move(trees), X.fingerprint(), "random_forest");
    }
  }
  throw TrainingError("unknown baseline kind");
}

}  // namespace salient
