#include <doctest.h>

#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "salient/anchors.hpp"
#include "salient/error.hpp"
#include "salient/synthetic.hpp"

using namespace salient;

namespace {

std::size_t fat_column() { return *default_schema().index_of("Meal Macros (Fat level)"); }

// Margin +5 when fat >= High, -5 otherwise.
GBTModel fat_indicator() {
  Tree t;
  TreeNode root{.feature = static_cast<int>(fat_column()), .threshold = 1.5, .left = 1, .right = 2};
  t.nodes = {root, TreeNode{.value = -5}, TreeNode{.value = 5}};
  return GBTModel({t}, 1.0, 0.0, FeedbackMode::Manual, default_schema().fingerprint());
}

const SyntheticDataset& source_data() {
  static const SyntheticDataset ds = [] {
    SyntheticSpec spec;
    spec.n = 800;
    return generate_synthetic_dataset(spec);
  }();
  return ds;
}

std::size_t first_row_with_fat(double level) {
  const auto& X = source_data().X;
  for (std::size_t i = 0; i < X.rows(); ++i) {
    if (X.value(i, fat_column()) == level) return i;
  }
  FAIL("no row with the requested fat level");
  return 0;
}

}  // namespace

TEST_CASE("the indicator model anchors on fat >= High") {
  const auto model = fat_indicator();
  const auto& X = source_data().X;
  const auto x = X.row(first_row_with_fat(2));
  const auto rule = find_anchor(model, x, X, default_schema());
  REQUIRE(rule.predicates.size() == 1);
  CHECK(rule.predicates[0] == Predicate{fat_column(), CompareOp::Ge, 2});
  CHECK(rule.precision == 1.0);
  CHECK(rule.proven);
  CHECK(rule.target_class == 1);
  const auto j = anchor_to_json(rule, default_schema());
  CHECK(j["predicates"][0]["text"] == "Meal Macros (Fat level) ≥ High");
}

TEST_CASE("negative instances anchor on the other side") {
  const auto model = fat_indicator();
  const auto& X = source_data().X;
  const auto x = X.row(first_row_with_fat(0));
  const auto rule = find_anchor(model, x, X, default_schema());
  REQUIRE(rule.predicates.size() == 1);
  CHECK(rule.predicates[0] == Predicate{fat_column(), CompareOp::Le, 0});
  CHECK(rule.target_class == 0);
  CHECK(rule.precision == 1.0);
}

TEST_CASE("tau zero accepts the empty rule") {
  const auto model = fat_indicator();
  const auto& X = source_data().X;
  AnchorConfig cfg;
  cfg.tau = 0.0;
  const auto rule = find_anchor(model, X.row(3), X, default_schema(), cfg);
  CHECK(rule.predicates.empty());
  CHECK(rule.coverage == 1.0);
  CHECK(rule.proven);
}

TEST_CASE("candidates hold on the instance and skip trivial predicates") {
  const auto& X = source_data().X;
  for (std::size_t i = 0; i < 50; ++i) {
    const auto x = X.row(i);
    for (const auto& p : anchor_candidates(x, default_schema())) {
      CHECK(p.holds(x));
      const auto& dom = feature_domain(default_schema()[p.feature]);
      CHECK(std::any_of(dom.begin(), dom.end(), [&](double d) { return !p.holds(d); }));
    }
  }
}

TEST_CASE("the sampler only emits rows satisfying the rule") {
  const auto& X = source_data().X;
  const auto x = X.row(first_row_with_fat(2));
  const auto cands = anchor_candidates(x, default_schema());
  Rng pick(4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Predicate> preds;
    for (int k = 0; k < 3; ++k) preds.push_back(cands[pick.below(cands.size())]);
    AnchorSampler sampler(x, X, preds);
    Rng rng(trial);
    RowBuffer z(x);
    for (int s = 0; s < 200; ++s) {
      sampler.draw(rng, z);
      for (const auto& p : preds) CHECK(p.holds(z.view()));
    }
  }
}

TEST_CASE("found rules hold on the instance and search is deterministic") {
  const auto& ds = source_data();
  TrainConfig tc;
  tc.n_trees = 40;
  tc.max_depth = 3;
  const auto model = fit_gbt(ds.X, ds.labels, tc);
  AnchorConfig cfg;
  cfg.max_samples = 2000;
  for (std::size_t i = 0; i < 5; ++i) {
    const auto x = ds.X.row(i * 37);
    const auto a = find_anchor(model, x, ds.X, default_schema(), cfg);
    const auto b = find_anchor(model, x, ds.X, default_schema(), cfg);
    CHECK(a.predicates == b.predicates);
    CHECK(a.precision == b.precision);
    for (const auto& p : a.predicates) CHECK(p.holds(x));
    CHECK(a.precision_lower <= a.precision);
    CHECK(a.precision <= a.precision_upper);
    if (a.proven) {
      CHECK(a.precision_lower >= cfg.tau);
      CHECK(estimate_precision(model, x, a.predicates, ds.X, 5000, 77) >= cfg.tau - 0.05);
    }
    CHECK(a.coverage == doctest::Approx(rule_coverage(a.predicates, ds.X)));
  }
}

TEST_CASE("invalid configurations are rejected") {
  AnchorConfig cfg;
  cfg.delta = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = {};
  cfg.beam_width = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  const auto model = fat_indicator();
  CHECK_THROWS_AS(find_anchor(model, source_data().X.row(0), FeatureMatrix(0, default_schema().size()),
                              default_schema()),
                  Error);
}
