#include "salient/cross_validation.hpp"

#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "salient/error.hpp"
#include "salient/random.hpp"

namespace salient {

std::string_view to_token(ModelKind k) {
  switch (k) {
    case ModelKind::GBT: return "gbt";
    case ModelKind::LogReg: return "logreg";
    case ModelKind::DecisionTree: return "decision_tree";
    case ModelKind::RandomForest: return "random_forest";
  }
  return "?";
}

std::unique_ptr<Classifier> fit_model(const ModelSpec& spec, const FeatureMatrix& X,
                                      std::span<const std::uint8_t> y) {
  switch (spec.kind) {
    case ModelKind::GBT: return std::make_unique<GBTModel>(fit_gbt(X, y, spec.gbt));
    case ModelKind::LogReg: return fit_baseline(BaselineKind::LogReg, X, y, spec.baseline);
    case ModelKind::DecisionTree: return fit_baseline(BaselineKind::DecisionTree, X, y, spec.baseline);
    case ModelKind::RandomForest: return fit_baseline(BaselineKind::RandomForest, X, y, spec.baseline);
  }
  throw TrainingError("unknown model kind");
}

std::vector<int> stratified_folds(std::span<const std::uint8_t> labels, int k, std::uint64_t seed) {
  if (k < 2) throw Error("cross-validation needs k >= 2");
  if (labels.size() < static_cast<std::size_t>(k)) throw Error("dataset smaller than fold count");
  Rng rng(seed);
  std::vector<int> folds(labels.size(), -1);
  int offset = 0;
  for (std::uint8_t cls : {std::uint8_t{1}, std::uint8_t{0}}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if ((labels[i] != 0) == (cls != 0)) idx.push_back(i);
    }
    rng.shuffle(std::span<std::size_t>(idx));
    for (std::size_t p = 0; p < idx.size(); ++p) {
      folds[idx[p]] = static_cast<int>((p + static_cast<std::size_t>(offset)) % static_cast<std::size_t>(k));
    }
    // Continue dealing where the previous class stopped so fold sizes stay balanced.
    offset = static_cast<int>((idx.size() + static_cast<std::size_t>(offset)) % static_cast<std::size_t>(k));
  }
  return folds;
}

namespace {

struct FoldData {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

std::vector<FoldData> split_folds(const std::vector<int>& folds, int k) {
  std::vector<FoldData> out(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < folds.size(); ++i) {
    for (int f = 0; f < k; ++f) {
      (folds[i] == f ? out[static_cast<std::size_t>(f)].test : out[static_cast<std::size_t>(f)].train).push_back(i);
    }
  }
  return out;
}

void run_fold(const FeatureMatrix& X, std::span<const std::uint8_t> y, const ModelSpec& spec,
              const FoldData& fold, double threshold, std::vector<double>& oof, Metrics& metrics) {
  const auto Xtr = X.select_rows(fold.train);
  std::vector<std::uint8_t> ytr, yte;
  for (auto i : fold.train) ytr.push_back(y[i]);
  for (auto i : fold.test) yte.push_back(y[i]);
  const auto model = fit_model(spec, Xtr, ytr);
  std::vector<double> scores(fold.test.size());
  for (std::size_t t = 0; t < fold.test.size(); ++t) {
    scores[t] = model->probability(X.row(fold.test[t]));
    oof[fold.test[t]] = scores[t];
  }
  metrics = compute_metrics(scores, yte, threshold);
}

CvReport finish(std::span<const std::uint8_t> y, std::vector<int> folds, std::vector<double> oof,
                std::vector<Metrics> per_fold, double threshold) {
  CvReport r;
  r.pooled = compute_metrics(oof, y, threshold);
  Metrics mean;
  mean.pr_auc = 0.0;
  int defined = 0;
  for (const auto& m : per_fold) {
    mean.accuracy += m.accuracy;
    mean.precision += m.precision;
    mean.recall += m.recall;
    mean.f1 += m.f1;
    if (m.pr_auc_defined) {
      mean.pr_auc += m.pr_auc;
      ++defined;
    }
    mean.confusion.tp += m.confusion.tp;
    mean.confusion.fp += m.confusion.fp;
    mean.confusion.tn += m.confusion.tn;
    mean.confusion.fn += m.confusion.fn;
  }
  const auto k = static_cast<double>(per_fold.size());
  mean.accuracy /= k;
  mean.precision /= k;
  mean.recall /= k;
  mean.f1 /= k;
  mean.pr_auc_defined = defined > 0;
  mean.pr_auc = defined > 0 ? mean.pr_auc / defined : std::nan("");
  r.fold_mean = mean;
  r.per_fold = std::move(per_fold);
  r.oof_scores = std::move(oof);
  r.folds = std::move(folds);
  return r;
}

void check_inputs(const FeatureMatrix& X, std::span<const std::uint8_t> y) {
  if (X.rows() != y.size()) throw Error("label count does not match row count");
}

}  // namespace

CvReport cross_validate_serial(const FeatureMatrix& X, std::span<const std::uint8_t> y,
                               const ModelSpec& spec, int k, std::uint64_t seed, double threshold) {
  check_inputs(X, y);
  auto folds = stratified_folds(y, k, seed);
  const auto data = split_folds(folds, k);
  std::vector<double> oof(y.size(), 0.0);
  std::vector<Metrics> per_fold(static_cast<std::size_t>(k));
  for (int f = 0; f < k; ++f) {
    run_fold(X, y, spec, data[static_cast<std::size_t>(f)], threshold, oof, per_fold[static_cast<std::size_t>(f)]);
  }
  return finish(y, std::move(folds), std::move(oof), std::move(per_fold), threshold);
}

CvReport cross_validate(const FeatureMatrix& X, std::span<const std::uint8_t> y,
                        const ModelSpec& spec, int k, std::uint64_t seed, double threshold) {
  check_inputs(X, y);
  auto folds = stratified_folds(y, k, seed);
  const auto data = split_folds(folds, k);
  std::vector<double> oof(y.size(), 0.0);
  std::vector<Metrics> per_fold(static_cast<std::size_t>(k));
  std::vector<std::string> errors(static_cast<std::size_t>(k));
#pragma omp parallel for schedule(dynamic)
  for (int f = 0; f < k; ++f) {
    try {
      run_fold(X, y, spec, data[static_cast<std::size_t>(f)], threshold, oof, per_fold[static_cast<std::size_t>(f)]);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(f)] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw TrainingError(e);
  }
  return finish(y, std::move(folds), std::move(oof), std::move(per_fold), threshold);
}

void to_json(nlohmann::json& j, const CvReport& r) {
  j = nlohmann::json{{"pooled", r.pooled}, {"fold_mean", r.fold_mean}, {"per_fold", r.per_fold}};
}

}  // namespace salient
