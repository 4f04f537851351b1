#include "salient/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "salient/error.hpp"
#include "salient/random.hpp"

namespace salient {

void TrainConfig::validate() const {
  if (n_trees < 0) throw TrainingError("n_trees must be >= 0");
  if (max_depth < 0) throw TrainingError("max_depth must be >= 0");
  if (!(learning_rate > 0)) throw TrainingError("learning_rate must be > 0");
  if (lambda < 0) throw TrainingError("lambda must be >= 0");
  if (gamma < 0) throw TrainingError("gamma must be >= 0");
  if (min_child_weight < 0) throw TrainingError("min_child_weight must be >= 0");
  if (!(subsample > 0 && subsample <= 1)) throw TrainingError("subsample must be in (0, 1]");
}

GBTModel::GBTModel(std::vector<Tree> trees, double learning_rate, double base_score,
                   FeedbackMode mode, std::string schema_fingerprint, TrainConfig config)
    : trees_(std::move(trees)),
      learning_rate_(learning_rate),
      base_score_(base_score),
      mode_(mode),
      fingerprint_(std::move(schema_fingerprint)),
      config_(config) {}

double GBTModel::margin(RowView x) const {
  double sum = 0.0;
  for (const auto& t : trees_) sum += t.evaluate(x);
  return base_score_ + learning_rate_ * sum;
}

std::vector<double> GBTModel::feature_gain(std::size_t n_features) const {
  std::vector<double> gain(n_features, 0.0);
  for (const auto& t : trees_) {
    for (const auto& n : t.nodes) {
      if (!n.is_leaf()) gain.at(static_cast<std::size_t>(n.feature)) += n.gain;
    }
  }
  return gain;
}

double split_gain(double GL, double HL, double GR, double HR, double lambda, double gamma) {
  const double G = GL + GR;
  const double H = HL + HR;
  return 0.5 * (GL * GL / (HL + lambda) + GR * GR / (HR + lambda) - G * G / (H + lambda)) - gamma;
}

namespace {

struct NodeStats {
  double G = 0.0;
  double H = 0.0;
};

struct SplitCandidate {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
  bool default_left = true;
};

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& X, const std::vector<std::vector<std::uint32_t>>& sorted,
              const std::vector<double>& grad, const std::vector<double>& hess,
              const TrainConfig& config)
      : X_(X), sorted_(sorted), g_(grad), h_(hess), cfg_(config) {}

  Tree build(std::vector<int>& node_of) {
    Tree tree;
    tree.nodes.emplace_back();
    std::vector<NodeStats> stats(1);
    for (std::size_t r = 0; r < node_of.size(); ++r) {
      if (node_of[r] == 0) {
        stats[0].G += g_[r];
        stats[0].H += h_[r];
      }
    }
    std::vector<int> frontier{0};
    for (int depth = 0; depth < cfg_.max_depth && !frontier.empty(); ++depth) {
      const auto best = find_splits(frontier, stats, node_of, tree.nodes.size());
      std::vector<int> next;
      for (std::size_t k = 0; k < frontier.size(); ++k) {
        const int id = frontier[k];
        const auto& s = best[k];
        if (s.feature < 0) continue;
        const int left = static_cast<int>(tree.nodes.size());
        const int right = left + 1;
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        stats.resize(tree.nodes.size());
        auto& node = tree.nodes[static_cast<std::size_t>(id)];
        node.feature = s.feature;
        node.threshold = s.threshold;
        node.default_left = s.default_left;
        node.gain = s.gain;
        node.left = left;
        node.right = right;
        next.push_back(left);
        next.push_back(right);
      }
      if (next.empty()) break;
      for (std::size_t r = 0; r < node_of.size(); ++r) {
        const int id = node_of[r];
        if (id < 0) continue;
        const auto& node = tree.nodes[static_cast<std::size_t>(id)];
        if (node.is_leaf()) continue;
        const int child = node.goes_left(X_.row(r)) ? node.left : node.right;
        node_of[r] = child;
        stats[static_cast<std::size_t>(child)].G += g_[r];
        stats[static_cast<std::size_t>(child)].H += h_[r];
      }
      frontier = std::move(next);
    }
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
      auto& n = tree.nodes[i];
      if (n.is_leaf()) n.value = -stats[i].G / (stats[i].H + cfg_.lambda);
    }
    return tree;
  }

 private:
  std::vector<SplitCandidate> find_splits(const std::vector<int>& frontier,
                                          const std::vector<NodeStats>& stats,
                                          const std::vector<int>& node_of, std::size_t n_nodes) {
    std::vector<int> slot(n_nodes, -1);
    for (std::size_t k = 0; k < frontier.size(); ++k) slot[static_cast<std::size_t>(frontier[k])] = static_cast<int>(k);
    const std::size_t F = frontier.size();
    std::vector<SplitCandidate> best(F);
    std::vector<NodeStats> unmasked(F);
    std::vector<NodeStats> left(F);
    std::vector<double> last(F);
    std::vector<char> has_last(F);

    for (std::size_t f = 0; f < X_.cols(); ++f) {
      std::fill(unmasked.begin(), unmasked.end(), NodeStats{});
      for (auto r : sorted_[f]) {
        const int id = node_of[r];
        if (id < 0 || slot[static_cast<std::size_t>(id)] < 0) continue;
        auto& u = unmasked[static_cast<std::size_t>(slot[static_cast<std::size_t>(id)])];
        u.G += g_[r];
        u.H += h_[r];
      }
      std::fill(left.begin(), left.end(), NodeStats{});
      std::fill(has_last.begin(), has_last.end(), 0);
      for (auto r : sorted_[f]) {
        const int id = node_of[r];
        if (id < 0) continue;
        const int k = slot[static_cast<std::size_t>(id)];
        if (k < 0) continue;
        const double v = X_.value(r, f);
        if (has_last[k] && v > last[k]) {
          consider(best[k], stats[static_cast<std::size_t>(id)], unmasked[k], left[k],
                   static_cast<int>(f), 0.5 * (last[k] + v));
        }
        left[k].G += g_[r];
        left[k].H += h_[r];
        last[k] = v;
        has_last[k] = 1;
      }
    }
    return best;
  }

  void consider(SplitCandidate& best, const NodeStats& total, const NodeStats& unmasked,
                const NodeStats& left, int feature, double threshold) const {
    const NodeStats masked{total.G - unmasked.G, total.H - unmasked.H};
    const NodeStats right{unmasked.G - left.G, unmasked.H - left.H};
    auto eval = [&](const NodeStats& L, const NodeStats& R) -> double {
      if (L.H < cfg_.min_child_weight || R.H < cfg_.min_child_weight) return -INFINITY;
      return split_gain(L.G, L.H, R.G, R.H, cfg_.lambda, cfg_.gamma);
    };
    const double gain_left = eval({left.G + masked.G, left.H + masked.H}, right);
    const double gain_right = eval(left, {right.G + masked.G, right.H + masked.H});
    const bool to_left = gain_left >= gain_right;
    const double gain = to_left ? gain_left : gain_right;
    if (gain > best.gain) best = {gain, feature, threshold, to_left};
  }

  const FeatureMatrix& X_;
  const std::vector<std::vector<std::uint32_t>>& sorted_;
  const std::vector<double>& g_;
  const std::vector<double>& h_;
  const TrainConfig& cfg_;
};

}  // namespace

GBTModel fit_gbt(const FeatureMatrix& X, std::span<const std::uint8_t> y, const TrainConfig& config,
                 FeedbackMode mode) {
  config.validate();
  const std::size_t n = X.rows();
  if (n == 0 || X.cols() == 0) throw TrainingError("cannot fit on an empty feature matrix");
  if (y.size() != n) throw TrainingError("label count does not match row count");
  const auto positives = static_cast<std::size_t>(std::count_if(y.begin(), y.end(), [](auto v) { return v != 0; }));
  if (positives == 0 || positives == n) throw TrainingError("training labels contain a single class");

  const double prior = static_cast<double>(positives) / static_cast<double>(n);
  const double base_score = std::log(prior / (1.0 - prior));

  std::vector<std::vector<std::uint32_t>> sorted(X.cols());
  for (std::size_t f = 0; f < X.cols(); ++f) {
    auto& order = sorted[f];
    for (std::uint32_t r = 0; r < n; ++r) {
      if (!X.is_masked(r, f)) order.push_back(r);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return X.value(a, f) < X.value(b, f); });
  }

  std::vector<double> margin(n, base_score);
  std::vector<double> grad(n);
  std::vector<double> hess(n);
  std::vector<int> node_of(n);
  std::vector<Tree> trees;
  trees.reserve(static_cast<std::size_t>(config.n_trees));
  Rng rng(config.seed);

  for (int round = 0; round < config.n_trees; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = logistic(margin[i]);
      grad[i] = p - (y[i] ? 1.0 : 0.0);
      hess[i] = p * (1.0 - p);
      node_of[i] = config.subsample < 1.0 && !rng.bernoulli(config.subsample) ? -1 : 0;
    }
    TreeBuilder builder(X, sorted, grad, hess, config);
    trees.push_back(builder.build(node_of));
    const auto& tree = trees.back();
    for (std::size_t i = 0; i < n; ++i) margin[i] += config.learning_rate * tree.evaluate(X.row(i));
  }
  return GBTModel(std::move(trees), config.learning_rate, base_score, mode, X.fingerprint(), config);
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"n_trees", c.n_trees},
                     {"max_depth", c.max_depth},
                     {"learning_rate", c.learning_rate},
                     {"lambda", c.lambda},
                     {"gamma", c.gamma},
                     {"min_child_weight", c.min_child_weight},
                     {"subsample", c.subsample},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  c.n_trees = j.at("n_trees").get<int>();
  c.max_depth = j.at("max_depth").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.lambda = j.at("lambda").get<double>();
  c.gamma = j.at("gamma").get<double>();
  c.min_child_weight = j.at("min_child_weight").get<double>();
  c.subsample = j.at("subsample").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
}

void to_json(nlohmann::json& j, const GBTModel& m) {
  j = nlohmann::json{{"format_version", kModelFormatVersion},
                     {"kind", "gbt"},
                     {"mode", std::string(to_token(m.mode()))},
                     {"schema_fingerprint", m.schema_fingerprint()},
                     {"base_score", m.base_score()},
                     {"learning_rate", m.learning_rate()},
                     {"config", m.config()},
                     {"trees", m.trees()}};
}

void from_json(const nlohmann::json& j, GBTModel& m) {
  const int version = j.value("format_version", -1);
  if (version != kModelFormatVersion) {
    throw Error("model format_version " + std::to_string(version) + " is not supported (expected " +
                std::to_string(kModelFormatVersion) + ")");
  }
  if (j.value("kind", std::string{}) != "gbt") throw Error("model document is not a gbt model");
  const auto mode = parse_mode(j.at("mode").get<std::string>());
  if (!mode) throw Error("model document has an unknown mode");
  m = GBTModel(j.at("trees").get<std::vector<Tree>>(), j.at("learning_rate").get<double>(),
               j.at("base_score").get<double>(), *mode, j.at("schema_fingerprint").get<std::string>(),
               j.at("config").get<TrainConfig>());
}

}  // namespace salient
