#include "salient/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <cstdio>

#include "salient/error.hpp"
#include "salient/features.hpp"
#include "salient/random.hpp"

namespace salient {

namespace {

constexpr std::int64_t kEpoch = 1614556800;  // 2021-03-01T00:00:00Z
constexpr std::int64_t kSlot = 6 * 3600;

std::size_t column(std::string_view name) {
  const auto idx = default_schema().index_of(name);
  if (!idx) throw Error("default schema has no feature '" + std::string(name) + "'");
  return *idx;
}

Predicate pred(std::string_view name, CompareOp op, double threshold) {
  return Predicate{column(name), op, threshold};
}

std::string padded(const char* prefix, std::size_t v, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, v);
  return buf;
}

AnnotationVector sample_annotations(Rng& rng, const AnnotationMarginals& m) {
  AnnotationVector a;
  for (int k = 0; k < kMacroCount; ++k) {
    a.macro_levels[k] = static_cast<Level>(rng.categorical(m.macro_levels[k]));
  }
  for (int g = 0; g < kFoodGroupCount; ++g) {
    a.food_groups[g] = rng.bernoulli(m.food_group_p[g]);
    a.food_group_count += a.food_groups[g] ? 1 : 0;
  }
  for (int c = 0; c < kCookingMethodCount; ++c) a.cooking_methods[c] = rng.bernoulli(m.cooking_p[c]);
  const auto span = static_cast<std::uint64_t>(m.ingredient_max - m.ingredient_min + 1);
  a.ingredient_count = m.ingredient_min + static_cast<int>(rng.below(span));
  return a;
}

}  // namespace

AnnotationMarginals AnnotationMarginals::defaults() {
  AnnotationMarginals m;
  for (auto& row : m.macro_levels) row = {0.3, 0.4, 0.3};
  m.macro_levels[static_cast<int>(Macro::Fat)] = {0.2, 0.25, 0.55};
  m.macro_levels[static_cast<int>(Macro::Carbs)] = {0.25, 0.25, 0.5};
  m.food_group_p = {0.7, 0.5, 0.5, 0.3, 0.3};
  m.cooking_p = {0.2, 0.45, 0.15, 0.2, 0.2, 0.2, 0.2, 0.15, 0.3};
  m.meal_type_p = {0.3, 0.3, 0.3, 0.1};
  m.habit_p = {0.05, 0.1, 0.2, 0.25, 0.2, 0.15, 0.05};
  return m;
}

bool PlantedRule::holds(RowView row) const {
  return std::any_of(clauses.begin(), clauses.end(), [&](const auto& clause) {
    return std::all_of(clause.begin(), clause.end(), [&](const Predicate& p) { return p.holds(row); });
  });
}

std::vector<std::size_t> PlantedRule::features() const {
  std::vector<std::size_t> out;
  for (const auto& clause : clauses) {
    for (const auto& p : clause) out.push_back(p.feature);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string PlantedRule::describe(const FeatureSchema& schema) const {
  std::string out;
  for (std::size_t c = 0; c < clauses.size(); ++c) {
    if (c > 0) out += " OR ";
    out += "(";
    for (std::size_t i = 0; i < clauses[c].size(); ++i) {
      if (i > 0) out += " AND ";
      out += render_predicate(clauses[c][i], schema);
    }
    out += ")";
  }
  return out;
}

PlantedRule default_manual_rule() {
  return PlantedRule{{
      {pred("Meal Macros (Fat level)", CompareOp::Ge, 2),
       pred("Meal Macros (Calorie level) : Change[Prev1-Current]", CompareOp::Le, 0)},
      {pred("Meal Cooking (Pan/Air Fried) : Mean[Prev3-Current]", CompareOp::Ge, 0.75)},
  }};
}

PlantedRule default_auto_rule() {
  return PlantedRule{{
      {pred("Meal Macros (Calorie level) : Change[Prev1-Current]", CompareOp::Le, -1),
       pred("Meal Macros (Carbs level)", CompareOp::Ge, 2)},
      {pred("Meal Cooking (Pan/Air Fried) : Mean[Prev3-Current]", CompareOp::Ge, 0.75)},
      {pred("Meal Food Group (Vegetables) : Change[Prev2-Current]", CompareOp::Le, -1)},
  }};
}

void SyntheticSpec::validate() const {
  std::vector<std::string> v;
  if (n == 0) v.push_back("n must be positive");
  if (events_per_user == 0) v.push_back("events_per_user must be positive");
  if (!(noise_rate >= 0.0 && noise_rate < 0.5)) v.push_back("noise_rate must be in [0, 0.5)");
  if (!(manual_user_fraction >= 0.0 && manual_user_fraction <= 1.0)) {
    v.push_back("manual_user_fraction must be in [0, 1]");
  }
  if (marginals.ingredient_min < 0 || marginals.ingredient_max < marginals.ingredient_min) {
    v.push_back("ingredient range is empty");
  }
  auto check_rule = [&](const PlantedRule& r, const char* what) {
    if (r.clauses.empty()) v.push_back(std::string(what) + " has no clauses");
    for (const auto& clause : r.clauses) {
      if (clause.empty()) v.push_back(std::string(what) + " has an empty clause");
      for (const auto& p : clause) {
        if (p.feature >= schema.size()) v.push_back(std::string(what) + " references a column outside the schema");
      }
    }
  };
  check_rule(rule, "rule");
  if (auto_rule) check_rule(*auto_rule, "auto rule");
  if (!v.empty()) throw ValidationError("synthetic spec", std::move(v));
}

std::vector<std::size_t> SyntheticDataset::rows_for(FeedbackMode mode) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    if (modes[i] == mode) out.push_back(i);
  }
  return out;
}

SyntheticDataset generate_synthetic_dataset(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const std::size_t n_users = (spec.n + spec.events_per_user - 1) / spec.events_per_user;
  const int width = n_users < 1000 ? 3 : 6;

  std::vector<std::size_t> order(n_users);
  for (std::size_t u = 0; u < n_users; ++u) order[u] = u;
  rng.shuffle(std::span<std::size_t>(order));
  const auto n_manual = static_cast<std::size_t>(
      std::llround(spec.manual_user_fraction * static_cast<double>(n_users)));
  std::vector<FeedbackMode> user_mode(n_users, FeedbackMode::Auto);
  for (std::size_t r = 0; r < n_manual; ++r) user_mode[order[r]] = FeedbackMode::Manual;

  SyntheticDataset ds;
  std::vector<TrackedEvent> events;
  events.reserve(spec.n);
  std::map<std::string, FeedbackMode> mode_of;
  for (std::size_t u = 0; u < n_users; ++u) {
    const auto uid = padded("u", u + 1, width);
    UserProfile p{uid, {}};
    for (auto& h : p.prior_habits) h = static_cast<Frequency>(rng.categorical(spec.marginals.habit_p));
    ds.profiles.emplace(uid, p);
    mode_of[uid] = user_mode[u];
    const std::size_t count = std::min(spec.events_per_user, spec.n - u * spec.events_per_user);
    for (std::size_t e = 0; e < count; ++e) {
      TrackedEvent ev;
      ev.user_id = uid;
      ev.event_id = uid + padded("-e", e + 1, 4);
      ev.timestamp = kEpoch + static_cast<std::int64_t>(e) * kSlot + static_cast<std::int64_t>(rng.below(3600));
      ev.meal_type = static_cast<MealType>(rng.categorical(spec.marginals.meal_type_p));
      ev.annotations = sample_annotations(rng, spec.marginals);
      events.push_back(std::move(ev));
    }
  }

  auto extracted = extract_dataset(std::move(events), ds.profiles, spec.schema);
  ds.events = std::move(extracted.events);
  ds.vectors = std::move(extracted.vectors);
  ds.X = FeatureMatrix::from_vectors(ds.vectors);
  ds.rule = spec.rule;
  ds.auto_rule = spec.auto_rule;

  const std::size_t n = ds.events.size();
  ds.modes.resize(n);
  ds.clean_labels.resize(n);
  ds.labels.resize(n);
  ds.ratings.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    ds.modes[i] = mode_of.at(ds.events[i].user_id);
    const auto& rule = (ds.modes[i] == FeedbackMode::Auto && spec.auto_rule) ? *spec.auto_rule : spec.rule;
    const bool clean = rule.holds(ds.X.row(i));
    const bool noisy = rng.bernoulli(spec.noise_rate) ? !clean : clean;
    ds.clean_labels[i] = clean ? 1 : 0;
    ds.labels[i] = noisy ? 1 : 0;
    ds.ratings[i] = noisy ? 1 + static_cast<int>(rng.below(2)) : -2 + static_cast<int>(rng.below(3));
  }
  return ds;
}

double estimate_base_rate(const SyntheticSpec& spec, std::size_t n) {
  auto s = spec;
  s.n = n;
  s.noise_rate = 0.0;
  s.auto_rule.reset();
  s.seed = spec.seed ^ 0xA5A5A5A5ULL;
  const auto ds = generate_synthetic_dataset(s);
  std::size_t pos = 0;
  for (auto v : ds.clean_labels) pos += v;
  return static_cast<double>(pos) / static_cast<double>(n);
}

}  // namespace salient
