#include <doctest.h>

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "salient/baselines.hpp"
#include "salient/error.hpp"
#include "salient/shap.hpp"
#include "salient/synthetic.hpp"

using namespace salient;

namespace {

// Split on `feature`: left (value < threshold) gets `lo`, right gets `hi`.
Tree stump(int feature, double threshold, double lo, double hi) {
  Tree t;
  TreeNode root;
  root.feature = feature;
  root.threshold = threshold;
  root.left = 1;
  root.right = 2;
  t.nodes = {root, TreeNode{.value = lo}, TreeNode{.value = hi}};
  return t;
}

// I(x0 >= 1 AND x1 >= 1).
Tree and_tree() {
  Tree t;
  TreeNode root{.feature = 0, .threshold = 1, .left = 1, .right = 2};
  TreeNode inner{.feature = 1, .threshold = 1, .left = 3, .right = 4};
  t.nodes = {root, TreeNode{.value = 0}, inner, TreeNode{.value = 0}, TreeNode{.value = 1}};
  return t;
}

class ConstantModel final : public Classifier {
 public:
  explicit ConstantModel(double m) : m_(m) {}
  double margin(RowView) const override { return m_; }
  const std::string& schema_fingerprint() const override { return fp_; }
  std::string_view kind() const override { return "constant"; }

 private:
  double m_;
  std::string fp_;
};

}  // namespace

TEST_CASE("one player takes the full surplus") {
  const GBTModel m({stump(0, 1, 0, 1)}, 1.0, 0.0, FeedbackMode::Manual, "");
  const auto bg = FeatureMatrix::from_rows({{0}, {2}});
  const std::vector<double> x{2};
  for (const auto& a : {shap_bruteforce(m, {x, {}}, bg), shap_tree(m, {x, {}}, bg)}) {
    CHECK(a.base_value == doctest::Approx(0.5));
    REQUIRE(a.phi.size() == 1);
    CHECK(a.phi[0] == doctest::Approx(0.5));
  }
}

TEST_CASE("constant models attribute nothing") {
  const ConstantModel c(0.7);
  Rng rng(1);
  const auto bg = fixtures::random_matrix(rng, 5, 4, 3);
  const auto X = fixtures::random_matrix(rng, 3, 4, 3);
  const auto a = shap_bruteforce(c, X.row(0), bg);
  CHECK(a.base_value == doctest::Approx(0.7));
  for (double p : a.phi) CHECK(p == 0.0);
  const GBTModel leafy({Tree::leaf(0.3), Tree::leaf(-0.1)}, 0.5, 0.2, FeedbackMode::Auto, "");
  const auto t = shap_tree(leafy, X.row(0), bg);
  CHECK(t.base_value == doctest::Approx(0.3));
  for (double p : t.phi) CHECK(p == 0.0);
}

TEST_CASE("symmetric AND model splits credit equally") {
  const GBTModel m({and_tree()}, 1.0, 0.0, FeedbackMode::Manual, "");
  const auto bg = FeatureMatrix::from_rows({{0, 0}, {0, 1}, {1, 0}, {1, 1}});
  const std::vector<double> x{1, 1};
  const auto brute = shap_bruteforce(m, {x, {}}, bg);
  const auto tree = shap_tree(m, {x, {}}, bg);
  CHECK(brute.phi[0] == doctest::Approx(brute.phi[1]).epsilon(1e-15));
  CHECK(tree.phi[0] == doctest::Approx(tree.phi[1]).epsilon(1e-15));
  // v({}) = 1/4, v({1}) = 1/2, v({1,2}) = 1: each feature gets 3/8.
  CHECK(brute.phi[0] == doctest::Approx(0.375));
  CHECK(tree.phi[0] == doctest::Approx(0.375));
}

TEST_CASE("tree recursion equals subset enumeration on random ensembles") {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const int m = 1 + static_cast<int>(rng.below(8));
    const auto model = fixtures::random_ensemble(rng, 3, 3, m, 4);
    const auto bg = fixtures::random_matrix(rng, 1 + rng.below(16), static_cast<std::size_t>(m), 4, 0.2);
    const auto X = fixtures::random_matrix(rng, 1, static_cast<std::size_t>(m), 4, 0.2);
    const auto brute = shap_bruteforce(model, X.row(0), bg);
    const auto tree = shap_tree(model, X.row(0), bg);
    CHECK(tree.base_value == doctest::Approx(brute.base_value).epsilon(1e-12));
    for (int k = 0; k < m; ++k) {
      CHECK(std::abs(tree.phi[static_cast<std::size_t>(k)] - brute.phi[static_cast<std::size_t>(k)]) < 1e-9);
    }
  }
}

TEST_CASE("local accuracy and dummy features") {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const auto model = fixtures::random_ensemble(rng, 5, 4, 6, 3);
    // Features 6 and 7 exist in the rows but no tree uses them.
    const auto bg = fixtures::random_matrix(rng, 12, 8, 3, 0.1);
    const auto X = fixtures::random_matrix(rng, 4, 8, 3, 0.1);
    for (std::size_t i = 0; i < X.rows(); ++i) {
      const auto a = shap_tree(model, X.row(i), bg);
      CHECK(std::abs(a.total() - model.margin(X.row(i))) < 1e-9);
      for (std::size_t f = 0; f < 8; ++f) {
        bool used = false;
        for (const auto& t : model.trees()) used = used || t.uses_feature(f);
        if (!used) CHECK(a.phi[f] == 0.0);
      }
    }
  }
}

TEST_CASE("subset enumeration works for non-tree models") {
  Rng rng(2);
  const auto X = fixtures::random_matrix(rng, 120, 3, 4);
  std::vector<std::uint8_t> y(120);
  for (std::size_t i = 0; i < 120; ++i) y[i] = X.value(i, 0) + X.value(i, 1) > 3;
  const auto lr = fit_logreg(X, y, {});
  const auto bg = X.select_rows(std::vector<std::size_t>{0, 1, 2, 3, 4, 5});
  const auto a = explain_shap(lr, X.row(10), bg);
  CHECK(std::abs(a.total() - lr.margin(X.row(10))) < 1e-9);
  // A linear margin gives phi_k = w_k (x_k - mean_bg x_k) in standardised units,
  // so the sign follows the deviation from the background mean.
  CHECK(lr.weights()[0] > 0);
  double mean0 = 0;
  for (std::size_t i = 0; i < bg.rows(); ++i) mean0 += bg.value(i, 0) / 6.0;
  if (X.value(10, 0) > mean0) CHECK(a.phi[0] > 0);
  if (X.value(10, 0) < mean0) CHECK(a.phi[0] < 0);
}

TEST_CASE("subset enumeration refuses wide rows and empty backgrounds") {
  const ConstantModel c(0);
  Rng rng(3);
  const auto wide = fixtures::random_matrix(rng, 2, kMaxBruteForceFeatures + 1, 2);
  CHECK_THROWS_AS(shap_bruteforce(c, wide.row(0), wide), Error);
  const auto narrow = fixtures::random_matrix(rng, 1, 3, 2);
  CHECK_THROWS_AS(shap_bruteforce(c, narrow.row(0), FeatureMatrix(0, 3)), Error);
}

TEST_CASE("background sampling is capped, seeded and ordered") {
  Rng rng(5);
  const auto X = fixtures::random_matrix(rng, 1000, 2, 1000);
  const auto a = sample_background(X, 100, 3);
  const auto b = sample_background(X, 100, 3);
  CHECK(a.rows() == 100);
  for (std::size_t i = 0; i < 100; ++i) CHECK(a.value(i, 0) == b.value(i, 0));
  CHECK(sample_background(X, 5000).rows() == 1000);
}

TEST_CASE("the planted fat feature dominates attributions") {
  SyntheticSpec spec;
  spec.n = 1500;
  spec.noise_rate = 0.05;
  const auto fat = *default_schema().index_of("Meal Macros (Fat level)");
  spec.rule = PlantedRule{{{Predicate{fat, CompareOp::Ge, 2}}}};
  const auto ds = generate_synthetic_dataset(spec);
  TrainConfig cfg;
  cfg.n_trees = 60;
  cfg.max_depth = 3;
  const auto model = fit_gbt(ds.X, ds.labels, cfg);
  const auto bg = sample_background(ds.X, 64, 1);
  int checked = 0;
  for (std::size_t i = 0; i < ds.X.rows() && checked < 40; ++i) {
    if (!ds.rule.holds(ds.X.row(i))) continue;
    const auto a = shap_tree(model, ds.X.row(i), bg);
    std::size_t top = 0;
    for (std::size_t k = 1; k < a.phi.size(); ++k) {
      if (std::abs(a.phi[k]) > std::abs(a.phi[top])) top = k;
    }
    CHECK(top == fat);
    ++checked;
  }
  CHECK(checked == 40);
}

TEST_CASE("global summary ranks by mean absolute attribution") {
  const GBTModel m({stump(0, 1, 0, 2), stump(1, 1, 0, 0.5)}, 1.0, 0.0, FeedbackMode::Manual, "");
  const auto X = FeatureMatrix::from_rows({{0, 0, 1}, {2, 2, 0}, {2, 0, 1}});
  const FeatureSchema schema({FeatureSpec::make(AnnotationPath::macro(Macro::Fat), Aggregator::Identity),
                              FeatureSpec::make(AnnotationPath::macro(Macro::Carbs), Aggregator::Identity),
                              FeatureSpec::make(AnnotationPath::macro(Macro::Protein), Aggregator::Identity)});
  const auto s = global_shap_summary(m, X, X, schema);
  CHECK(s.rank == std::vector<int>{1, 2, 3});
  CHECK(s.mean_abs_phi[2] == 0.0);
  for (std::size_t k = 0; k < 3; ++k) {
    double acc = 0;
    for (const auto& a : s.attributions) acc += std::abs(a.phi[k]);
    CHECK(s.mean_abs_phi[k] == doctest::Approx(acc / 3));
  }
  std::ostringstream csv;
  write_global_shap_csv(csv, s);
  std::istringstream lines(csv.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == "feature,value,phi");
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 9);
}

TEST_CASE("parallel and serial batches agree") {
  Rng rng(8);
  const auto model = fixtures::random_ensemble(rng, 5, 3, 6, 3);
  const auto X = fixtures::random_matrix(rng, 40, 6, 3, 0.1);
  const auto bg = fixtures::random_matrix(rng, 10, 6, 3, 0.1);
  const auto a = shap_batch(model, X, bg);
  const auto b = shap_batch_serial(model, X, bg);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].phi == b[i].phi);
    CHECK(a[i].base_value == b[i].base_value);
  }
  const nlohmann::json j = a[0];
  CHECK(j["phi"].size() == 6);
}
