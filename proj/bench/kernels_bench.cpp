// OpenMP kernels against their serial references on synthetic data.

#include <benchmark/benchmark.h>

#include "salient/anchors.hpp"
#include "salient/cross_validation.hpp"
#include "salient/shap.hpp"
#include "salient/synthetic.hpp"

namespace {

using namespace salient;

const SyntheticDataset& data() {
  static const SyntheticDataset ds = [] {
    SyntheticSpec spec;
    spec.n = 2000;
    return generate_synthetic_dataset(spec);
  }();
  return ds;
}

const GBTModel& model() {
  static const GBTModel m = [] {
    TrainConfig cfg;
    cfg.n_trees = 100;
    return fit_gbt(data().X, data().labels, cfg);
  }();
  return m;
}

const FeatureMatrix& background() {
  static const FeatureMatrix bg = sample_background(data().X, 128, 0);
  return bg;
}

void BM_Extract(benchmark::State& state) {
  const auto& ds = data();
  const auto universe = feature_universe();
  for (auto _ : state) {
    auto out = state.range(0) ? extract_dataset(ds.events, ds.profiles, universe)
                              : extract_dataset_serial(ds.events, ds.profiles, universe);
    benchmark::DoNotOptimize(out.vectors.data());
  }
}
BENCHMARK(BM_Extract)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Predict(benchmark::State& state) {
  const auto& X = data().X;
  for (auto _ : state) {
    auto p = state.range(0) ? predict_batch(model(), X) : predict_batch_serial(model(), X);
    benchmark::DoNotOptimize(p.data());
  }
}
BENCHMARK(BM_Predict)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Shap(benchmark::State& state) {
  const std::vector<std::size_t> rows{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15};
  const auto X = data().X.select_rows(rows);
  for (auto _ : state) {
    auto a = state.range(0) ? shap_batch(model(), X, background()) : shap_batch_serial(model(), X, background());
    benchmark::DoNotOptimize(a.data());
  }
}
BENCHMARK(BM_Shap)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_CrossValidate(benchmark::State& state) {
  ModelSpec spec;
  spec.gbt.n_trees = 50;
  const auto& ds = data();
  for (auto _ : state) {
    auto r = state.range(0) ? cross_validate(ds.X, ds.labels, spec, 5, 0)
                            : cross_validate_serial(ds.X, ds.labels, spec, 5, 0);
    benchmark::DoNotOptimize(r.oof_scores.data());
  }
}
BENCHMARK(BM_CrossValidate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Anchor(benchmark::State& state) {
  const auto& ds = data();
  AnchorConfig cfg;
  cfg.max_samples = 2000;
  for (auto _ : state) {
    auto r = state.range(0) ? find_anchor(model(), ds.X.row(0), background(), default_schema(), cfg)
                            : find_anchor_serial(model(), ds.X.row(0), background(), default_schema(), cfg);
    benchmark::DoNotOptimize(r.precision);
  }
}
BENCHMARK(BM_Anchor)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
