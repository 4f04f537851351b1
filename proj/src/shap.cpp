#include "salient/shap.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include <nlohmann/json.hpp>

#include "salient/error.hpp"
#include "salient/random.hpp"

namespace salient {

namespace {

void check_shapes(RowView x, const FeatureMatrix& background) {
  if (background.rows() == 0) throw Error("SHAP needs a nonempty background set");
  if (background.cols() != x.size()) {
    throw SchemaMismatchError("background has " + std::to_string(background.cols()) +
                              " features, instance has " + std::to_string(x.size()));
  }
}

// Row whose features come from x where `from_x` is set and from z otherwise.
void compose(RowBuffer& out, RowView x, RowView z, std::uint32_t from_x) {
  for (std::size_t j = 0; j < x.size(); ++j) {
    const bool take_x = (from_x >> j) & 1U;
    out.values[j] = take_x ? x[j] : z[j];
    out.masked[j] = (take_x ? x.is_masked(j) : z.is_masked(j)) ? 1 : 0;
  }
}

// (a-1)! b! / (a+b)! computed as a product to stay exact for small a, b.
double coalition_weight(int a, int b) {
  double w = 1.0 / a;
  for (int i = 1; i <= b; ++i) w *= static_cast<double>(i) / static_cast<double>(a + i);
  return w;
}

// Interventional Shapley contributions of one tree for one (x, z) pair.
// Walking the tree, a split where x and z disagree branches into "feature
// taken from x" (set A) and "feature taken from z" (set B); a feature already
// assigned on the path must keep its side. The leaf is reached exactly by
// coalitions containing A and disjoint from B. Leaf values are summed into
// per-feature buckets keyed by the weight's (a, b), so the weights are applied
// once at the end and mirrored features see identical arithmetic.
class PairRecursion {
 public:
  PairRecursion(const Tree& tree, RowView x, RowView z, std::vector<std::int8_t>& side,
                std::vector<std::size_t>& path, std::span<double> buckets, std::size_t width)
      : tree_(tree), x_(x), z_(z), side_(side), path_(path), buckets_(buckets), width_(width) {}

  void run() { visit(0, 0, 0); }

 private:
  void visit(int node, int a, int b) {
    const auto& n = tree_.nodes[static_cast<std::size_t>(node)];
    if (n.is_leaf()) {
      for (auto f : path_) {
        auto* cell = &buckets_[f * width_ * width_];
        if (side_[f] == 1) cell[static_cast<std::size_t>(a) * width_ + static_cast<std::size_t>(b)] += n.value;
        else cell[static_cast<std::size_t>(b) * width_ + static_cast<std::size_t>(a)] -= n.value;
      }
      return;
    }
    const auto f = static_cast<std::size_t>(n.feature);
    const bool xl = n.goes_left(x_);
    const bool zl = n.goes_left(z_);
    if (xl == zl) {
      visit(xl ? n.left : n.right, a, b);
      return;
    }
    if (side_[f] == 1) {
      visit(xl ? n.left : n.right, a, b);
      return;
    }
    if (side_[f] == 2) {
      visit(zl ? n.left : n.right, a, b);
      return;
    }
    path_.push_back(f);
    side_[f] = 1;
    visit(xl ? n.left : n.right, a + 1, b);
    side_[f] = 2;
    visit(zl ? n.left : n.right, a, b + 1);
    side_[f] = 0;
    path_.pop_back();
  }

  const Tree& tree_;
  RowView x_;
  RowView z_;
  std::vector<std::int8_t>& side_;
  std::vector<std::size_t>& path_;
  std::span<double> buckets_;
  std::size_t width_;
};

}  // namespace

double ShapAttribution::total() const {
  return std::accumulate(phi.begin(), phi.end(), base_value);
}

ShapAttribution shap_bruteforce(const Classifier& model, RowView x, const FeatureMatrix& background) {
  check_shapes(x, background);
  const std::size_t M = x.size();
  if (M > kMaxBruteForceFeatures) {
    throw Error("brute-force SHAP supports at most " + std::to_string(kMaxBruteForceFeatures) +
                " features, got " + std::to_string(M));
  }
  const std::uint32_t n_sets = 1U << M;
  // v holds background sums; the mean is taken after differencing.
  std::vector<double> v(n_sets, 0.0);
  RowBuffer row(x);
  for (std::uint32_t s = 0; s < n_sets; ++s) {
    double sum = 0.0;
    for (std::size_t r = 0; r < background.rows(); ++r) {
      compose(row, x, background.row(r), s);
      sum += model.margin(row.view());
    }
    v[s] = sum;
  }
  const double n_bg = static_cast<double>(background.rows());
  // weight[s] = s! (M - s - 1)! / M!
  std::vector<double> weight(M, 0.0);
  for (std::size_t s = 0; s < M; ++s) {
    weight[s] = coalition_weight(static_cast<int>(M - s), static_cast<int>(s));
  }
  ShapAttribution out;
  out.base_value = v[0] / n_bg;
  out.phi.assign(M, 0.0);
  std::vector<double> by_size(M);
  for (std::size_t k = 0; k < M; ++k) {
    const std::uint32_t bit = 1U << k;
    std::fill(by_size.begin(), by_size.end(), 0.0);
    for (std::uint32_t s = 0; s < n_sets; ++s) {
      if (s & bit) continue;
      by_size[static_cast<std::size_t>(std::popcount(s))] += v[s | bit] - v[s];
    }
    double acc = 0.0;
    for (std::size_t c = 0; c < M; ++c) acc += weight[c] * by_size[c];
    out.phi[k] = acc / n_bg;
  }
  return out;
}

ShapAttribution shap_tree(const GBTModel& model, RowView x, const FeatureMatrix& background) {
  check_shapes(x, background);
  const std::size_t M = x.size();
  int depth = 0;
  for (const auto& tree : model.trees()) depth = std::max(depth, tree.depth());
  const auto width = static_cast<std::size_t>(depth) + 1;
  std::vector<double> buckets(M * width * width, 0.0);
  std::vector<std::int8_t> side(M, 0);
  std::vector<std::size_t> path;
  double bg_sum = 0.0;
  for (std::size_t r = 0; r < background.rows(); ++r) {
    const auto z = background.row(r);
    for (const auto& tree : model.trees()) {
      bg_sum += tree.evaluate(z);
      PairRecursion(tree, x, z, side, path, buckets, width).run();
    }
  }
  const double scale = model.learning_rate() / static_cast<double>(background.rows());
  ShapAttribution out;
  out.base_value = model.base_score() + bg_sum * scale;
  out.phi.assign(M, 0.0);
  for (std::size_t k = 0; k < M; ++k) {
    const double* cell = &buckets[k * width * width];
    double acc = 0.0;
    for (std::size_t a = 1; a < width; ++a) {
      for (std::size_t b = 0; b < width; ++b) {
        const double sum = cell[a * width + b];
        if (sum != 0.0) acc += coalition_weight(static_cast<int>(a), static_cast<int>(b)) * sum;
      }
    }
    out.phi[k] = acc * scale;
  }
  return out;
}

ShapAttribution explain_shap(const Classifier& model, RowView x, const FeatureMatrix& background) {
  if (const auto* gbt = dynamic_cast<const GBTModel*>(&model)) return shap_tree(*gbt, x, background);
  return shap_bruteforce(model, x, background);
}

std::vector<ShapAttribution> shap_batch_serial(const Classifier& model, const FeatureMatrix& X,
                                               const FeatureMatrix& background) {
  std::vector<ShapAttribution> out(X.rows());
  for (std::size_t i = 0; i < X.rows(); ++i) out[i] = explain_shap(model, X.row(i), background);
  return out;
}

std::vector<ShapAttribution> shap_batch(const Classifier& model, const FeatureMatrix& X,
                                        const FeatureMatrix& background) {
  std::vector<ShapAttribution> out(X.rows());
  std::vector<std::string> errors(X.rows());
  const long n = static_cast<long>(X.rows());
#pragma omp parallel for schedule(dynamic, 4)
  for (long i = 0; i < n; ++i) {
    const auto r = static_cast<std::size_t>(i);
    try {
      out[r] = explain_shap(model, X.row(r), background);
    } catch (const std::exception& e) {
      errors[r] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw Error(e);
  }
  return out;
}

FeatureMatrix sample_background(const FeatureMatrix& X, std::size_t cap, std::uint64_t seed) {
  if (X.rows() <= cap) return X;
  std::vector<std::size_t> idx(X.rows());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(idx));
  idx.resize(cap);
  std::sort(idx.begin(), idx.end());
  return X.select_rows(idx);
}

GlobalShapSummary global_shap_summary(const Classifier& model, const FeatureMatrix& X,
                                      const FeatureMatrix& background, const FeatureSchema& schema) {
  if (schema.size() != X.cols()) throw SchemaMismatchError("schema width does not match the dataset");
  GlobalShapSummary s;
  for (const auto& f : schema) s.features.push_back(f.name);
  s.values = X;
  s.attributions = shap_batch(model, X, background);
  const std::size_t M = X.cols();
  s.mean_abs_phi.assign(M, 0.0);
  for (const auto& a : s.attributions) {
    for (std::size_t k = 0; k < M; ++k) s.mean_abs_phi[k] += std::fabs(a.phi[k]);
  }
  if (X.rows() > 0) {
    for (auto& m : s.mean_abs_phi) m /= static_cast<double>(X.rows());
  }
  s.rank.assign(M, 1);
  for (std::size_t k = 0; k < M; ++k) {
    for (std::size_t o = 0; o < M; ++o) {
      if (s.mean_abs_phi[o] > s.mean_abs_phi[k]) ++s.rank[k];
    }
  }
  return s;
}

void write_global_shap_csv(std::ostream& out, const GlobalShapSummary& summary) {
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  };
  char buf[64];
  out << "feature,value,phi\n";
  for (std::size_t i = 0; i < summary.attributions.size(); ++i) {
    for (std::size_t k = 0; k < summary.features.size(); ++k) {
      out << quote(summary.features[k]) << ',';
      std::snprintf(buf, sizeof buf, "%.10g,%.10g", summary.values.value(i, k),
                    summary.attributions[i].phi[k]);
      out << buf << '\n';
    }
  }
}

void to_json(nlohmann::json& j, const ShapAttribution& a) {
  j = nlohmann::json{{"event_id", a.event_id}, {"base_value", a.base_value}, {"phi", a.phi}};
}

}  // namespace salient
