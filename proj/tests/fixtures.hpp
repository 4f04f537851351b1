#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "salient/domain.hpp"
#include "salient/features.hpp"
#include "salient/gbt.hpp"
#include "salient/random.hpp"

namespace fixtures {

using namespace salient;

inline TrackedEvent meal(std::string id, std::int64_t ts, MealType type = MealType::Lunch,
                         std::string user = "u1") {
  TrackedEvent e;
  e.event_id = std::move(id);
  e.user_id = std::move(user);
  e.timestamp = ts;
  e.meal_type = type;
  return e;
}

inline void set_groups(TrackedEvent& e, std::initializer_list<FoodGroup> groups) {
  e.annotations.food_groups.fill(false);
  for (auto g : groups) e.annotations.food_groups[static_cast<int>(g)] = true;
  e.annotations.food_group_count = static_cast<int>(groups.size());
}

inline UserProfile profile(std::string user = "u1", Frequency veg = Frequency::Weekly4to6,
                           Frequency fruit = Frequency::Daily1) {
  UserProfile p;
  p.user_id = std::move(user);
  p.prior_habits[static_cast<int>(Habit::Vegetables)] = veg;
  p.prior_habits[static_cast<int>(Habit::Fruits)] = fruit;
  return p;
}

// Random valid annotation vector.
inline AnnotationVector random_annotations(Rng& rng) {
  AnnotationVector a;
  for (auto& l : a.macro_levels) l = static_cast<Level>(rng.below(3));
  for (auto& g : a.food_groups) {
    g = rng.bernoulli(0.5);
    a.food_group_count += g ? 1 : 0;
  }
  for (auto& c : a.cooking_methods) c = rng.bernoulli(0.3);
  a.ingredient_count = static_cast<int>(rng.below(12));
  return a;
}

inline std::vector<TrackedEvent> random_stream(Rng& rng, std::size_t n, const std::string& user = "u1") {
  std::vector<TrackedEvent> out;
  for (std::size_t i = 0; i < n; ++i) {
    auto e = meal(user + "-" + std::to_string(i), 1000 + static_cast<std::int64_t>(i) * 3600,
                  static_cast<MealType>(rng.below(4)), user);
    e.annotations = random_annotations(rng);
    out.push_back(std::move(e));
  }
  return out;
}

// Random tree of depth <= max_depth over n_features features with small
// integer thresholds, built node by node.
inline Tree random_tree(Rng& rng, int max_depth, int n_features, int n_values) {
  Tree t;
  struct Pending {
    int node;
    int depth;
  };
  t.nodes.push_back({});
  std::vector<Pending> stack{{0, 0}};
  while (!stack.empty()) {
    const auto p = stack.back();
    stack.pop_back();
    const bool split = p.depth < max_depth && rng.uniform() < 0.8;
    if (!split) {
      t.nodes[static_cast<std::size_t>(p.node)].value = rng.uniform() * 2.0 - 1.0;
      continue;
    }
    TreeNode n;
    n.feature = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_features)));
    n.threshold = 0.5 + static_cast<double>(rng.below(static_cast<std::uint64_t>(n_values - 1)));
    n.default_left = rng.bernoulli(0.5);
    n.left = static_cast<int>(t.nodes.size());
    n.right = n.left + 1;
    t.nodes[static_cast<std::size_t>(p.node)] = n;
    t.nodes.push_back({});
    t.nodes.push_back({});
    stack.push_back({n.left, p.depth + 1});
    stack.push_back({n.right, p.depth + 1});
  }
  return t;
}

inline GBTModel random_ensemble(Rng& rng, int max_trees, int max_depth, int n_features, int n_values,
                                const std::string& fingerprint = {}) {
  std::vector<Tree> trees;
  const int n_trees = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_trees)));
  for (int i = 0; i < n_trees; ++i) trees.push_back(random_tree(rng, max_depth, n_features, n_values));
  return GBTModel(std::move(trees), 0.1 + rng.uniform(), rng.uniform() - 0.5, FeedbackMode::Manual, fingerprint);
}

// Matrix of random integer values in [0, n_values) with a random mask.
inline FeatureMatrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, int n_values,
                                   double mask_p = 0.0, const std::string& fingerprint = {}) {
  FeatureMatrix X(rows, cols, fingerprint);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      X.set(i, j, static_cast<double>(rng.below(static_cast<std::uint64_t>(n_values))), rng.uniform() < mask_p);
    }
  }
  return X;
}

}  // namespace fixtures
