#include <doctest.h>

#include "fixtures.hpp"
#include "salient/anchors.hpp"
#include "salient/cross_validation.hpp"
#include "salient/shap.hpp"
#include "salient/synthetic.hpp"

using namespace salient;

// Each OpenMP kernel against its serial reference, bit for bit.

TEST_CASE("feature extraction") {
  SyntheticSpec spec;
  spec.n = 600;
  const auto ds = generate_synthetic_dataset(spec);
  const auto a = extract_dataset(ds.events, ds.profiles, feature_universe());
  const auto b = extract_dataset_serial(ds.events, ds.profiles, feature_universe());
  REQUIRE(a.vectors.size() == b.vectors.size());
  for (std::size_t i = 0; i < a.vectors.size(); ++i) {
    CHECK(a.vectors[i].event_id == b.vectors[i].event_id);
    CHECK(a.vectors[i].values == b.vectors[i].values);
    CHECK(a.vectors[i].masked == b.vectors[i].masked);
  }
}

TEST_CASE("batch prediction and cross-validation") {
  SyntheticSpec spec;
  spec.n = 500;
  const auto ds = generate_synthetic_dataset(spec);
  ModelSpec ms;
  ms.gbt.n_trees = 20;
  const auto model = fit_gbt(ds.X, ds.labels, ms.gbt);
  CHECK(predict_batch(model, ds.X) == predict_batch_serial(model, ds.X));
  const auto a = cross_validate(ds.X, ds.labels, ms, 5, 9);
  const auto b = cross_validate_serial(ds.X, ds.labels, ms, 5, 9);
  CHECK(a.oof_scores == b.oof_scores);
  CHECK(a.folds == b.folds);
  CHECK(a.pooled.f1 == b.pooled.f1);
}

TEST_CASE("SHAP batches") {
  Rng rng(10);
  const auto model = fixtures::random_ensemble(rng, 8, 4, 10, 3);
  const auto X = fixtures::random_matrix(rng, 64, 10, 3, 0.2);
  const auto bg = fixtures::random_matrix(rng, 32, 10, 3, 0.2);
  const auto a = shap_batch(model, X, bg);
  const auto b = shap_batch_serial(model, X, bg);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].phi == b[i].phi);
}

TEST_CASE("anchor search") {
  SyntheticSpec spec;
  spec.n = 400;
  const auto ds = generate_synthetic_dataset(spec);
  TrainConfig tc;
  tc.n_trees = 20;
  const auto model = fit_gbt(ds.X, ds.labels, tc);
  AnchorConfig cfg;
  cfg.max_samples = 800;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto a = find_anchor(model, ds.X.row(i * 50), ds.X, default_schema(), cfg);
    const auto b = find_anchor_serial(model, ds.X.row(i * 50), ds.X, default_schema(), cfg);
    CHECK(a.predicates == b.predicates);
    CHECK(a.precision == b.precision);
    CHECK(a.coverage == b.coverage);
  }
}
