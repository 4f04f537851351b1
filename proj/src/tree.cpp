#include "salient/tree.hpp"

#include <algorithm>
#include <functional>

#include <nlohmann/json.hpp>

#include "salient/classifier.hpp"
#include "salient/error.hpp"

namespace salient {

int Tree::depth() const {
  std::function<int(int)> rec = [&](int i) -> int {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    if (n.is_leaf()) return 0;
    return 1 + std::max(rec(n.left), rec(n.right));
  };
  return nodes.empty() ? 0 : rec(0);
}

bool Tree::uses_feature(std::size_t feature) const {
  return std::any_of(nodes.begin(), nodes.end(), [&](const TreeNode& n) {
    return !n.is_leaf() && static_cast<std::size_t>(n.feature) == feature;
  });
}

namespace {

nlohmann::json node_to_json(const Tree& t, int i) {
  const auto& n = t.nodes[static_cast<std::size_t>(i)];
  if (n.is_leaf()) return nlohmann::json{{"leaf", n.value}};
  return nlohmann::json{{"split", n.feature},          {"threshold", n.threshold},
                        {"default_left", n.default_left}, {"gain", n.gain},
                        {"left", node_to_json(t, n.left)}, {"right", node_to_json(t, n.right)}};
}

int node_from_json(const nlohmann::json& j, Tree& t) {
  const int idx = static_cast<int>(t.nodes.size());
  t.nodes.emplace_back();
  if (j.contains("leaf")) {
    t.nodes[static_cast<std::size_t>(idx)].value = j.at("leaf").get<double>();
    return idx;
  }
  TreeNode n;
  n.feature = j.at("split").get<int>();
  if (n.feature < 0) throw Error("negative split feature in tree");
  n.threshold = j.at("threshold").get<double>();
  n.default_left = j.at("default_left").get<bool>();
  n.gain = j.value("gain", 0.0);
  n.left = node_from_json(j.at("left"), t);
  n.right = node_from_json(j.at("right"), t);
  t.nodes[static_cast<std::size_t>(idx)] = n;
  return idx;
}

}  // namespace

void to_json(nlohmann::json& j, const Tree& t) { j = node_to_json(t, 0); }

void from_json(const nlohmann::json& j, Tree& t) {
  t.nodes.clear();
  node_from_json(j, t);
}

double predict_proba(const Classifier& model, const FeatureVector& x) {
  if (x.schema_fingerprint != model.schema_fingerprint()) {
    throw SchemaMismatchError("feature vector " + x.event_id + " has schema " +
                              x.schema_fingerprint + ", model expects " +
                              model.schema_fingerprint());
  }
  return model.probability(view_of(x));
}

std::vector<double> predict_batch_serial(const Classifier& model, const FeatureMatrix& X) {
  std::vector<double> out(X.rows());
  for (std::size_t i = 0; i < X.rows(); ++i) out[i] = model.probability(X.row(i));
  return out;
}

std::vector<double> predict_batch(const Classifier& model, const FeatureMatrix& X) {
  std::vector<double> out(X.rows());
  const long n = static_cast<long>(X.rows());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = model.probability(X.row(static_cast<std::size_t>(i)));
  }
  return out;
}

}  // namespace salient
