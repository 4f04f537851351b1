// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Runtime limits are part of each criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "salient/anchors.hpp"
#include "salient/counterfactual.hpp"
#include "salient/cross_validation.hpp"
#include "salient/feature_domain.hpp"
#include "salient/metrics.hpp"
#include "salient/saliency.hpp"
#include "salient/shap.hpp"
#include "salient/synthetic.hpp"

#ifdef SALIENT_WITH_SERVICE
#include <filesystem>
#include <fstream>

#include "salient/service/records.hpp"
#include "salient/service/store.hpp"
#endif

using namespace salient;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void run(int id, const char* title, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs < limit_s;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  std::printf("[%s] %d %s: %s (%.1f s, limit %.0f s%s)\n", pass ? "PASS" : "FAIL", id, title, o.detail.c_str(),
              secs, limit_s, in_time ? "" : ", exceeded");
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// 1. TreeSHAP against subset enumeration.
Outcome shap_equivalence() {
  Rng rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int m = 1 + static_cast<int>(rng.below(8));
    const auto model = fixtures::random_ensemble(rng, 3, 3, m, 4);
    const auto bg = fixtures::random_matrix(rng, 1 + rng.below(16), static_cast<std::size_t>(m), 4, 0.15);
    const auto x = fixtures::random_matrix(rng, 1, static_cast<std::size_t>(m), 4, 0.15);
    const auto brute = shap_bruteforce(model, x.row(0), bg);
    const auto tree = shap_tree(model, x.row(0), bg);
    worst = std::max(worst, std::abs(brute.base_value - tree.base_value));
    for (std::size_t k = 0; k < brute.phi.size(); ++k) worst = std::max(worst, std::abs(brute.phi[k] - tree.phi[k]));
  }
  return {worst < 1e-9, "200 ensembles, max |tree - brute| = " + fmt("%.3g", worst)};
}

// Copy of t with features a and b exchanged.
Tree swap_features(Tree t, int a, int b) {
  for (auto& n : t.nodes) {
    if (n.feature == a) n.feature = b;
    else if (n.feature == b) n.feature = a;
  }
  return t;
}

// 2. Local accuracy, dummy and symmetry.
Outcome shap_axioms() {
  Rng rng(77);
  double worst_local = 0.0;
  std::size_t dummy_violations = 0;
  double worst_sym = 0.0;
  std::size_t instances = 0;

  // Local accuracy on a trained model and on random ensembles.
  SyntheticSpec spec;
  spec.n = 600;
  const auto ds = generate_synthetic_dataset(spec);
  TrainConfig cfg;
  cfg.n_trees = 100;
  const auto trained = fit_gbt(ds.X, ds.labels, cfg);
  const auto bg = sample_background(ds.X, 128, 1);
  for (std::size_t i = 0; i < ds.X.rows(); i += 6) {
    const auto a = shap_tree(trained, ds.X.row(i), bg);
    worst_local = std::max(worst_local, std::abs(a.total() - trained.margin(ds.X.row(i))));
    ++instances;
  }

  for (int trial = 0; trial < 300; ++trial) {
    const int used = 1 + static_cast<int>(rng.below(6));
    const std::size_t width = static_cast<std::size_t>(used) + 1 + rng.below(3);
    const auto model = fixtures::random_ensemble(rng, 4, 4, used, 3);
    const auto bgr = fixtures::random_matrix(rng, 1 + rng.below(16), width, 3, 0.15);
    const auto x = fixtures::random_matrix(rng, 1, width, 3, 0.15);
    const auto a = width <= kMaxBruteForceFeatures && trial % 3 == 0 ? shap_bruteforce(model, x.row(0), bgr)
                                                                     : shap_tree(model, x.row(0), bgr);
    worst_local = std::max(worst_local, std::abs(a.total() - model.margin(x.row(0))));
    ++instances;
    for (std::size_t f = 0; f < width; ++f) {
      bool in_use = false;
      for (const auto& t : model.trees()) in_use = in_use || t.uses_feature(f);
      if (!in_use && a.phi[f] != 0.0) ++dummy_violations;
    }
  }

  // Symmetric ensembles: every tree comes with its 0<->1 mirror, the
  // background is closed under the swap and the instance has x0 == x1.
  // Leaves are multiples of 1/8 so every margin is exact in floating point.
  for (int trial = 0; trial < 300; ++trial) {
    const int m = 2 + static_cast<int>(rng.below(4));
    std::vector<Tree> trees;
    auto t = fixtures::random_tree(rng, 3, m, 3);
    for (auto& n : t.nodes) {
      if (n.is_leaf()) n.value = std::round(n.value * 8) / 8;
    }
    trees.push_back(t);
    trees.push_back(swap_features(t, 0, 1));
    const GBTModel model(trees, 0.5, 0.25, FeedbackMode::Manual, "");
    auto half = fixtures::random_matrix(rng, 1 + rng.below(6), static_cast<std::size_t>(m), 3, 0.0);
    FeatureMatrix bgr(half.rows() * 2, static_cast<std::size_t>(m));
    for (std::size_t r = 0; r < half.rows(); ++r) {
      for (std::size_t j = 0; j < static_cast<std::size_t>(m); ++j) {
        const std::size_t mirror = j == 0 ? 1 : (j == 1 ? 0 : j);
        bgr.set(2 * r, j, half.value(r, j));
        bgr.set(2 * r + 1, j, half.value(r, mirror));
      }
    }
    auto x = fixtures::random_matrix(rng, 1, static_cast<std::size_t>(m), 3, 0.0);
    x.set(0, 1, x.value(0, 0));
    for (const auto& a : {shap_tree(model, x.row(0), bgr), shap_bruteforce(model, x.row(0), bgr)}) {
      worst_sym = std::max(worst_sym, std::abs(a.phi[0] - a.phi[1]));
    }
  }
  // The AND model on the uniform 4-point background.
  {
    Tree t;
    t.nodes = {TreeNode{.feature = 0, .threshold = 1, .left = 1, .right = 2}, TreeNode{.value = 0},
               TreeNode{.feature = 1, .threshold = 1, .left = 3, .right = 4}, TreeNode{.value = 0},
               TreeNode{.value = 1}};
    const GBTModel model({t}, 1.0, 0.0, FeedbackMode::Manual, "");
    const auto bgr = FeatureMatrix::from_rows({{0, 0}, {0, 1}, {1, 0}, {1, 1}});
    const std::vector<double> x{1, 1};
    for (const auto& a : {shap_tree(model, {x, {}}, bgr), shap_bruteforce(model, {x, {}}, bgr)}) {
      worst_sym = std::max(worst_sym, std::abs(a.phi[0] - a.phi[1]));
    }
  }
  const bool pass = worst_local < 1e-9 && dummy_violations == 0 && worst_sym == 0.0;
  return {pass, std::to_string(instances) + " instances, max local error " + fmt("%.3g", worst_local) +
                    ", dummy violations " + std::to_string(dummy_violations) + ", max symmetry gap " +
                    fmt("%.3g", worst_sym)};
}

// 3. Anchor soundness and the indicator anchor.
Outcome anchor_soundness() {
  const AnchorConfig cfg;  // tau 0.95, delta 0.05
  std::size_t accepted = 0, sound = 0, unproven = 0;
  for (int k = 0; k < 50; ++k) {
    SyntheticSpec spec;
    spec.n = 1000;
    spec.seed = 1000 + static_cast<std::uint64_t>(k);
    if (k % 2) spec.rule = default_auto_rule();
    const auto ds = generate_synthetic_dataset(spec);
    TrainConfig tc;
    tc.n_trees = 100;
    tc.seed = static_cast<std::uint64_t>(k);
    const auto model = fit_gbt(ds.X, ds.labels, tc);
    AnchorConfig c = cfg;
    c.seed = static_cast<std::uint64_t>(k);
    for (std::size_t i : {std::size_t{100}, std::size_t{500}}) {
      const auto x = ds.X.row(i);
      const auto rule = find_anchor(model, x, ds.X, default_schema(), c);
      if (!rule.proven) {
        ++unproven;
        continue;
      }
      ++accepted;
      const double fresh = estimate_precision(model, x, rule.predicates, ds.X, 10000, 0xC0FFEE + i + 7919 * k);
      if (fresh >= cfg.tau - 0.05) ++sound;
    }
  }
  const double rate = accepted ? static_cast<double>(sound) / static_cast<double>(accepted) : 0.0;

  // Indicator model I(fat >= High).
  const auto fat = *default_schema().index_of("Meal Macros (Fat level)");
  Tree t;
  t.nodes = {TreeNode{.feature = static_cast<int>(fat), .threshold = 1.5, .left = 1, .right = 2},
             TreeNode{.value = -5}, TreeNode{.value = 5}};
  const GBTModel indicator({t}, 1.0, 0.0, FeedbackMode::Manual, default_schema().fingerprint());
  SyntheticSpec spec;
  spec.n = 1000;
  const auto ds = generate_synthetic_dataset(spec);
  std::size_t row = 0;
  while (ds.X.value(row, fat) != 2.0) ++row;
  const auto ind = find_anchor(indicator, ds.X.row(row), ds.X, default_schema(), cfg);
  const bool exact = ind.predicates == std::vector<Predicate>{{fat, CompareOp::Ge, 2.0}} && ind.precision == 1.0 &&
                     estimate_precision(indicator, ds.X.row(row), ind.predicates, ds.X, 10000, 5) == 1.0;

  const bool pass = accepted > 0 && rate >= 0.95 && exact;
  return {pass, std::to_string(sound) + "/" + std::to_string(accepted) + " accepted anchors re-estimate >= 0.90 (" +
                    fmt("%.3f", rate) + "), " + std::to_string(unproven) + " unproven; indicator anchor " +
                    (exact ? "{fat >= High} precision 1.0" : "WRONG: " + std::to_string(ind.predicates.size()) +
                                                                 " predicates, precision " +
                                                                 fmt("%.3f", ind.precision))};
}

const SyntheticDataset& planted() {
  static const SyntheticDataset ds = [] {
    SyntheticSpec spec;  // n 2000, noise 0.1, seed 7
    return generate_synthetic_dataset(spec);
  }();
  return ds;
}

// 4. GBT against the baselines under 5-fold CV.
Outcome learner_capability() {
  const auto& ds = planted();
  std::map<std::string, double> f1;
  for (auto kind : {ModelKind::GBT, ModelKind::LogReg, ModelKind::DecisionTree, ModelKind::RandomForest}) {
    ModelSpec spec;
    spec.kind = kind;
    f1[std::string(to_token(kind))] = cross_validate(ds.X, ds.labels, spec, 5, 7).pooled.f1;
  }
  const double g = f1["gbt"];
  bool dominates = true;
  std::string detail = "pooled F1:";
  for (const auto& [name, v] : f1) {
    detail += " " + name + " " + fmt("%.4f", v);
    if (name != "gbt" && v > g) dominates = false;
  }
  return {g >= 0.85 && dominates, detail};
}

// 5. Signed confidence change ordered by SHAP rank.
Outcome saliency_ordering() {
  const auto& ds = planted();
  const auto& schema = default_schema();
  std::vector<std::size_t> train, test;
  for (std::size_t i = 0; i < ds.X.rows(); ++i) (i % 5 == 4 ? test : train).push_back(i);
  const auto Xtr = ds.X.select_rows(train);
  std::vector<std::uint8_t> ytr;
  for (auto i : train) ytr.push_back(ds.labels[i]);
  const auto model = fit_gbt(Xtr, ytr, TrainConfig{});
  const auto bg = sample_background(Xtr, 256, 7);
  std::vector<double> mean(schema.size(), 0.0);
  for (std::size_t j = 0; j < schema.size(); ++j) {
    for (std::size_t r = 0; r < bg.rows(); ++r) mean[j] += bg.value(r, j) / static_cast<double>(bg.rows());
  }
  const std::array<std::size_t, 3> ranks{1, 3, 5};
  std::array<double, 3> sum{};
  const auto actionable = actionable_mask(schema);
  for (auto i : test) {
    const auto x = ds.X.row(i);
    const auto a = shap_tree(model, x, bg);
    const double dir = model.probability(x) > 0.5 ? 1.0 : -1.0;
    std::vector<std::size_t> order;
    for (std::size_t j = 0; j < schema.size(); ++j) {
      if (actionable[j]) order.push_back(j);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t p, std::size_t q) { return dir * a.phi[p] > dir * a.phi[q]; });
    for (std::size_t r = 0; r < ranks.size(); ++r) {
      const auto f = order[ranks[r] - 1];
      const auto rule = instance_predicate(x, f, schema, mean[f]);
      sum[r] += signed_confidence_change(model, x, rule, schema);
    }
  }
  const double n = static_cast<double>(test.size());
  const double m1 = sum[0] / n, m3 = sum[1] / n, m5 = sum[2] / n;
  return {test.size() >= 200 && m1 > m3 && m3 > m5,
          std::to_string(test.size()) + " held-out instances, mean dp rank1 " + fmt("%.4f", m1) + " > rank3 " +
              fmt("%.4f", m3) + " > rank5 " + fmt("%.4f", m5)};
}

// 6. Hand-built streams against hand arithmetic.
Outcome golden_vectors() {
  const auto& s = default_schema();
  std::vector<TrackedEvent> stream;
  const std::array<bool, 5> pan{false, true, true, true, false};
  const std::array<Level, 5> fat{Level::Low, Level::Medium, Level::High, Level::High, Level::High};
  const std::array<Level, 5> cal{Level::Medium, Level::Medium, Level::Low, Level::High, Level::Medium};
  const std::array<bool, 5> baked{false, false, true, false, true};
  for (int t = 0; t < 5; ++t) {
    auto e = fixtures::meal("g" + std::to_string(t), 3600 * t);
    e.annotations.cooking_methods[static_cast<int>(CookingMethod::PanAirFried)] = pan[t];
    e.annotations.cooking_methods[static_cast<int>(CookingMethod::Baked)] = baked[t];
    e.annotations.macro_levels[static_cast<int>(Macro::Fat)] = fat[t];
    e.annotations.macro_levels[static_cast<int>(Macro::Calorie)] = cal[t];
    stream.push_back(e);
  }
  const auto vs = extract_features(stream, fixtures::profile(), s);
  std::vector<std::string> bad;
  auto expect = [&](std::string_view name, double want, std::string_view label) {
    const auto j = *s.index_of(name);
    const double got = vs[4].values[j];
    if (got != want || vs[4].masked[j] || value_label(s[j], got) != label) bad.emplace_back(name);
  };
  expect("Meal Cooking (Pan/Air Fried) : Mean[Prev3-Current]", 0.75, "3/4");
  expect("Meal Macros (Fat level) : Change[Prev2-Current]", 0.0, "Unchanged");
  expect("Meal Macros (Fat level) : Highest[Prev3-Current]", 2.0, "High");

  // Baked over the last three meals is 1,0,1: population SD sqrt(2/9).
  const auto sd = *s.index_of("Meal Cooking (Baked) : SD[Prev2-Current]");
  if (vs[4].values[sd] != std::sqrt(2.0 / 9.0)) bad.emplace_back("baked SD");
  // Calorie levels 1,0,2,1 over the last four meals: slope 0.2.
  const FeatureSchema trend({FeatureSpec::make(AnnotationPath::macro(Macro::Calorie), Aggregator::Trend,
                                               WindowSpec::prev(3))});
  const auto tv = extract_features(stream, fixtures::profile(), trend);
  if (std::abs(tv[4].values[0] - 0.2) > 1e-15) bad.emplace_back("calorie trend");
  // Constant series has zero trend.
  const std::vector<double> flat{2, 2, 2, 2};
  if (aggregate(Aggregator::Trend, flat) != 0.0) bad.emplace_back("flat trend");
  std::string detail = "5 golden values";
  if (!bad.empty()) {
    detail += "; mismatched:";
    for (const auto& b : bad) detail += " [" + b + "]";
  }
  return {bad.empty(), detail};
}

// 7. Fusion invariants under random attributions and weights.
Outcome fusion_invariants() {
  Rng rng(31337);
  std::size_t violations = 0;
  const auto& schema = default_schema();
  const auto actionable = actionable_mask(schema);
  for (int trial = 0; trial < 10000; ++trial) {
    std::vector<double> pm(schema.size()), pa(schema.size());
    for (std::size_t j = 0; j < schema.size(); ++j) {
      pm[j] = rng.bernoulli(0.1) ? 0.0 : rng.uniform() * 2 - 1;
      pa[j] = rng.bernoulli(0.1) ? pm[j] : rng.uniform() * 2 - 1;
    }
    const ModeWeights w{rng.uniform() * 3, 0.001 + rng.uniform() * 3};
    const double c = std::ldexp(1.0, static_cast<int>(rng.below(21)) - 10);
    const ModeWeights scaled{w.manual * c, w.automatic * c};
    const ModeConfidence conf{rng.uniform(), rng.uniform()};
    const double dir = rng.bernoulli(0.5) ? 1.0 : -1.0;

    const auto a = select_which(pm, pa, w, 3, actionable, dir);
    const auto b = select_which(pm, pa, scaled, 3, actionable, dir);
    bool same = a.size() == b.size();
    for (std::size_t i = 0; same && i < a.size(); ++i) same = a[i].feature == b[i].feature && a[i].mode == b[i].mode;
    same = same && decide_how_event(conf, w) == decide_how_event(conf, scaled);
    same = same && decide_when(conf) == decide_when(conf);
    if (!same) ++violations;
    if (a.size() > 3) ++violations;
    for (const auto& sf : select_which(pm, pa, ModeWeights{0.0, w.automatic}, 3, actionable, dir)) {
      if (sf.mode != FeedbackMode::Auto) ++violations;
    }
  }
  return {violations == 0, "10000 draws, " + std::to_string(violations) + " violations"};
}

// 9. compute_metrics against an independent exhaustive oracle.
Outcome metrics_oracle() {
  const std::array<double, 5> grid{0.0, 0.3, 0.5, 0.7, 1.0};
  std::size_t cases = 0, mismatches = 0;
  for (std::size_t n = 1; n <= 6; ++n) {
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) total *= 2 * grid.size();
    std::vector<double> s(n);
    std::vector<std::uint8_t> y(n);
    for (std::size_t code = 0; code < total; ++code) {
      auto c = code;
      for (std::size_t i = 0; i < n; ++i) {
        y[i] = static_cast<std::uint8_t>(c % 2);
        s[i] = grid[(c / 2) % grid.size()];
        c /= 2 * grid.size();
      }
      ++cases;
      double tp = 0, fp = 0, fn = 0, tn = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const bool p = s[i] >= 0.5;
        tp += p && y[i];
        fp += p && !y[i];
        fn += !p && y[i];
        tn += !p && !y[i];
      }
      const double prec = tp + fp > 0 ? tp / (tp + fp) : 0.0;
      const double rec = tp + fn > 0 ? tp / (tp + fn) : 0.0;
      const double f1 = tp > 0 ? 2 * tp / (2 * tp + fp + fn) : 0.0;
      double ap = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!y[i]) continue;
        double above = 0, hits = 0;
        for (std::size_t j = 0; j < n; ++j) {
          if (s[j] > s[i] || (s[j] == s[i] && j <= i)) {
            above += 1;
            hits += y[j];
          }
        }
        ap += hits / above;
      }
      const double pos = tp + fn;
      const auto m = compute_metrics(s, y);
      const auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12; };
      bool ok = m.confusion == ConfusionCounts{static_cast<std::size_t>(tp), static_cast<std::size_t>(fp),
                                               static_cast<std::size_t>(tn), static_cast<std::size_t>(fn)};
      ok = ok && close(m.accuracy, (tp + tn) / static_cast<double>(n)) && close(m.precision, prec) &&
           close(m.recall, rec) && close(m.f1, f1);
      ok = ok && (pos == 0 ? (!m.pr_auc_defined && std::isnan(m.pr_auc)) : close(m.pr_auc, ap / pos));
      if (!ok) ++mismatches;
    }
  }
  return {mismatches == 0, std::to_string(cases) + " arrangements, " + std::to_string(mismatches) + " mismatches"};
}

#ifdef SALIENT_WITH_SERVICE
namespace fs = std::filesystem;

struct Captured {
  int status = -1;
  std::string out;
};

Captured capture(const std::string& cmd) {
  Captured c;
  FILE* p = popen((cmd + " 2>/dev/null").c_str(), "r");
  if (!p) return c;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, p)) > 0) c.out.append(buf, got);
  c.status = pclose(p);
  return c;
}

// 8. CLI determinism and ingest idempotence.
Outcome end_to_end() {
  const fs::path root = fs::temp_directory_path() / ("salient-accept-" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string cli = SALIENT_CLI_PATH;
  auto sim = [&](const std::string& dir) {
    return capture(cli + " --json --data-dir " + (root / dir).string() + " simulate --seed 7");
  };
  const auto a = sim("a");
  const auto b = sim("b");
  const bool same_output = a.status == 0 && b.status == 0 && !a.out.empty() && a.out == b.out;
  bool same_models = true;
  for (const char* f : {"models/manual.json", "models/auto.json", "models/cv_report.json"}) {
    std::ifstream fa(root / "a" / f, std::ios::binary), fb(root / "b" / f, std::ios::binary);
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    same_models = same_models && !sa.str().empty() && sa.str() == sb.str();
  }

  // Export the simulated events, then ingest them twice into a fresh store.
  SyntheticSpec spec;
  spec.n = 400;
  const auto ds = generate_synthetic_dataset(spec);
  std::vector<service::EventLogRecord> rows;
  for (std::size_t i = 0; i < ds.events.size(); ++i) {
    rows.push_back(service::EventLogRecord{ds.events[i], ds.ratings[i], ds.modes[i]});
  }
  {
    std::ofstream out(root / "events.csv");
    service::write_event_csv(out, rows);
    std::ofstream prof(root / "profiles.jsonl");
    service::write_profiles_jsonl(prof, ds.profiles);
  }
  const auto store_dir = (root / "store").string();
  const std::string ingest = cli + " --json --data-dir " + store_dir + " ingest " + (root / "events.csv").string() +
                             " --profiles " + (root / "profiles.jsonl").string();
  const auto first = capture(ingest);
  std::string digest1;
  {
    service::Store store(root / "store" / "salient.db");
    digest1 = store.digest();
  }
  const auto second = capture(ingest);
  std::string digest2;
  std::size_t events = 0;
  {
    service::Store store(root / "store" / "salient.db");
    digest2 = store.digest();
    events = store.event_count();
  }
  const bool idempotent = first.status == 0 && second.status == 0 && digest1 == digest2 && events == ds.events.size();
  fs::remove_all(root);
  const bool pass = same_output && same_models && idempotent;
  return {pass, std::string("simulate output ") + (same_output ? "identical" : "DIFFERS") + " (" +
                    std::to_string(a.out.size()) + " bytes), model files " + (same_models ? "identical" : "DIFFER") +
                    ", re-ingest " + (idempotent ? "left the store unchanged" : "CHANGED the store") + " (" +
                    std::to_string(events) + " events)"};
}
#endif

}  // namespace

int main() {
  run(1, "SHAP oracle equivalence", 60, shap_equivalence);
  run(2, "SHAP axioms", 30, shap_axioms);
  run(3, "Anchor soundness", 300, anchor_soundness);
  run(4, "Learner capability", 120, learner_capability);
  run(5, "Saliency correctness ordering", 60, saliency_ordering);
  run(6, "Feature golden vectors", 5, golden_vectors);
  run(7, "Fusion invariants", 10, fusion_invariants);
#ifdef SALIENT_WITH_SERVICE
  run(8, "End-to-end determinism", 180, end_to_end);
#else
  ++failures;
  std::printf("[FAIL] 8 End-to-end determinism: service layer not built\n");
#endif
  run(9, "Metrics oracle", 30, metrics_oracle);
  return failures == 0 ? 0 : 1;
}
