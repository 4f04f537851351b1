#include "salient/features.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <nlohmann/json.hpp>

#include "salient/error.hpp"

namespace salient {

namespace {

constexpr std::array<std::string_view, 6> kAggTokens{"identity", "mean", "sd",
                                                     "trend",    "change", "highest"};
constexpr std::array<std::string_view, 6> kAggWords{"Identity", "Mean", "SD",
                                                    "Trend",    "Change", "Highest"};
constexpr std::array<std::string_view, 6> kBaseTokens{"macro_level", "food_group",
                                                      "food_group_count", "cooking",
                                                      "ingredient_count", "prior_habit"};

std::string fnv1a_hex(const std::vector<FeatureSpec>& features) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& f : features) {
    for (unsigned char c : f.name) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= '\n';
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

double mean_of(std::span<const double> w) {
  return std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
}

// Per-event base values for every annotation path a schema may read.
struct BaseTable {
  static constexpr int kWidth = kMacroCount + kFoodGroupCount + 1 + kCookingMethodCount + 1;

  static int column(const AnnotationPath& p) {
    switch (p.kind) {
      case BaseKind::MacroLevel: return p.index;
      case BaseKind::FoodGroup: return kMacroCount + p.index;
      case BaseKind::FoodGroupCount: return kMacroCount + kFoodGroupCount;
      case BaseKind::Cooking: return kMacroCount + kFoodGroupCount + 1 + p.index;
      case BaseKind::IngredientCount: return kWidth - 1;
      case BaseKind::PriorHabit: break;
    }
    return -1;
  }
};

}  // namespace

std::string AnnotationPath::label() const {
  switch (kind) {
    case BaseKind::MacroLevel:
      return "Meal Macros (" + std::string(macro_word(static_cast<Macro>(index))) + " level)";
    case BaseKind::FoodGroup:
      return "Meal Food Group (" + std::string(food_group_word(static_cast<FoodGroup>(index))) + ")";
    case BaseKind::FoodGroupCount: return "Meal Food Groups Count";
    case BaseKind::Cooking:
      return "Meal Cooking (" + std::string(cooking_word(static_cast<CookingMethod>(index))) + ")";
    case BaseKind::IngredientCount: return "Meal Ingredients Count";
    case BaseKind::PriorHabit:
      return "Prior Eating Habit (" + std::string(habit_word(static_cast<Habit>(index))) + ")";
  }
  return {};
}

double AnnotationPath::read(const AnnotationVector& a) const {
  switch (kind) {
    case BaseKind::MacroLevel: return static_cast<double>(a.macro_levels.at(index));
    case BaseKind::FoodGroup: return a.food_groups.at(index) ? 1.0 : 0.0;
    case BaseKind::FoodGroupCount: return a.food_group_count;
    case BaseKind::Cooking: return a.cooking_methods.at(index) ? 1.0 : 0.0;
    case BaseKind::IngredientCount: return a.ingredient_count;
    case BaseKind::PriorHabit: break;
  }
  throw Error("prior habits are profile attributes, not event annotations");
}

std::string_view to_token(Aggregator a) { return kAggTokens.at(static_cast<std::size_t>(a)); }
std::string_view aggregator_word(Aggregator a) { return kAggWords.at(static_cast<std::size_t>(a)); }

WindowSpec WindowSpec::prev(int n) {
  if (n < 1 || n > 3) throw Error("PrevN window needs n in 1..3, got " + std::to_string(n));
  return {Kind::PrevN, n};
}

std::string WindowSpec::label() const {
  if (kind == Kind::PrevSameMealType) return "PrevSameMealType-Current";
  return "Prev" + std::to_string(n) + "-Current";
}

FeatureSpec FeatureSpec::make(AnnotationPath base, Aggregator agg, std::optional<WindowSpec> window) {
  if ((agg == Aggregator::Identity) != !window.has_value()) {
    throw Error("identity features take no window; every other aggregator needs one");
  }
  if (base.kind == BaseKind::PriorHabit && agg != Aggregator::Identity) {
    throw Error("prior habit features cannot be windowed");
  }
  std::string name = base.label();
  if (window) {
    name += " : " + std::string(aggregator_word(agg)) + "[" + window->label() + "]";
  }
  return FeatureSpec{std::move(name), base, agg, window};
}

FeatureSchema::FeatureSchema(std::vector<FeatureSpec> features)
    : features_(std::move(features)), fingerprint_(fnv1a_hex(features_)) {
  for (std::size_t i = 0; i < features_.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (features_[i].name == features_[j].name) {
        throw Error("duplicate feature name in schema: " + features_[i].name);
      }
    }
  }
}

std::optional<std::size_t> FeatureSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (features_[i].name == name) return i;
  }
  return std::nullopt;
}

FeatureSchema FeatureSchema::subset(std::span<const std::size_t> indices) const {
  std::vector<FeatureSpec> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(features_.at(i));
  return FeatureSchema(std::move(out));
}

const FeatureSchema& default_schema() {
  static const FeatureSchema schema = [] {
    using A = Aggregator;
    using P = AnnotationPath;
    const auto prev = WindowSpec::prev;
    std::vector<FeatureSpec> f;
    f.push_back(FeatureSpec::make(P::habit(Habit::Vegetables), A::Identity));
    f.push_back(FeatureSpec::make(P::habit(Habit::Fruits), A::Identity));
    for (int m = 0; m < kMacroCount; ++m) {
      f.push_back(FeatureSpec::make(P::macro(static_cast<Macro>(m)), A::Identity));
    }
    for (int g = 0; g < kFoodGroupCount; ++g) {
      f.push_back(FeatureSpec::make(P::food_group(static_cast<FoodGroup>(g)), A::Identity));
    }
    f.push_back(FeatureSpec::make(P::food_group_count(), A::Identity));
    f.push_back(FeatureSpec::make(P::cooking(CookingMethod::Baked), A::Identity));
    f.push_back(FeatureSpec::make(P::macro(Macro::Calorie), A::Mean, prev(1)));
    f.push_back(FeatureSpec::make(P::macro(Macro::Calorie), A::Highest, prev(3)));
    f.push_back(FeatureSpec::make(P::macro(Macro::Protein), A::Highest, prev(3)));
    f.push_back(FeatureSpec::make(P::macro(Macro::Fat), A::Highest, prev(3)));
    f.push_back(FeatureSpec::make(P::macro(Macro::Calorie), A::Change, prev(1)));
    f.push_back(FeatureSpec::make(P::macro(Macro::Fat), A::Change, prev(2)));
    f.push_back(FeatureSpec::make(P::food_group(FoodGroup::Vegetables), A::Change, prev(2)));
    f.push_back(FeatureSpec::make(P::food_group(FoodGroup::Vegetables), A::Change,
                                  WindowSpec::same_meal_type()));
    f.push_back(FeatureSpec::make(P::ingredient_count(), A::Highest, prev(2)));
    f.push_back(FeatureSpec::make(P::cooking(CookingMethod::Microwaved), A::Mean, prev(1)));
    f.push_back(FeatureSpec::make(P::cooking(CookingMethod::Microwaved), A::Mean, prev(3)));
    f.push_back(FeatureSpec::make(P::cooking(CookingMethod::PanAirFried), A::Mean, prev(3)));
    f.push_back(FeatureSpec::make(P::cooking(CookingMethod::Baked), A::SD, prev(2)));
    f.push_back(FeatureSpec::make(P::cooking(CookingMethod::DeepFried), A::SD, prev(2)));
    f.push_back(FeatureSpec::make(P::cooking(CookingMethod::Raw), A::SD, prev(3)));
    f.push_back(FeatureSpec::make(P::cooking(CookingMethod::Steamed), A::Trend, prev(3)));
    return FeatureSchema(std::move(f));
  }();
  return schema;
}

FeatureSchema feature_universe() {
  std::vector<AnnotationPath> bases;
  for (int m = 0; m < kMacroCount; ++m) bases.push_back(AnnotationPath::macro(static_cast<Macro>(m)));
  for (int g = 0; g < kFoodGroupCount; ++g) {
    bases.push_back(AnnotationPath::food_group(static_cast<FoodGroup>(g)));
  }
  bases.push_back(AnnotationPath::food_group_count());
  for (int c = 0; c < kCookingMethodCount; ++c) {
    bases.push_back(AnnotationPath::cooking(static_cast<CookingMethod>(c)));
  }
  bases.push_back(AnnotationPath::ingredient_count());

  std::vector<FeatureSpec> f;
  for (int h = 0; h < kHabitCount; ++h) {
    f.push_back(FeatureSpec::make(AnnotationPath::habit(static_cast<Habit>(h)), Aggregator::Identity));
  }
  for (const auto& b : bases) f.push_back(FeatureSpec::make(b, Aggregator::Identity));
  const std::array<WindowSpec, 4> windows{WindowSpec::prev(1), WindowSpec::prev(2),
                                          WindowSpec::prev(3), WindowSpec::same_meal_type()};
  const std::array<Aggregator, 5> aggs{Aggregator::Mean, Aggregator::SD, Aggregator::Trend,
                                       Aggregator::Change, Aggregator::Highest};
  for (const auto& b : bases) {
    for (auto agg : aggs) {
      for (const auto& w : windows) f.push_back(FeatureSpec::make(b, agg, w));
    }
  }
  return FeatureSchema(std::move(f));
}

double aggregate(Aggregator agg, std::span<const double> window) {
  if (window.empty()) throw Error("cannot aggregate an empty window");
  const auto n = window.size();
  switch (agg) {
    case Aggregator::Identity: return window.back();
    case Aggregator::Mean: return mean_of(window);
    case Aggregator::SD: {
      const double mu = mean_of(window);
      double ss = 0.0;
      for (double v : window) ss += (v - mu) * (v - mu);
      return std::sqrt(ss / static_cast<double>(n));
    }
    case Aggregator::Trend: {
      if (n < 2) return 0.0;
      const double xbar = static_cast<double>(n - 1) / 2.0;
      const double ybar = mean_of(window);
      double sxy = 0.0;
      double sxx = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double dx = static_cast<double>(i) - xbar;
        sxy += dx * (window[i] - ybar);
        sxx += dx * dx;
      }
      return sxy / sxx;
    }
    case Aggregator::Change: {
      if (n < 2) return 0.0;
      const double current = window.back();
      const double prior = mean_of(window.first(n - 1));
      if (current > prior) return 1.0;
      if (current < prior) return -1.0;
      return 0.0;
    }
    case Aggregator::Highest: return *std::max_element(window.begin(), window.end());
  }
  return 0.0;
}

std::vector<FeatureVector> extract_features(std::span<const TrackedEvent> stream,
                                            const UserProfile& profile,
                                            const FeatureSchema& schema) {
  for (std::size_t t = 0; t < stream.size(); ++t) {
    if (stream[t].user_id != profile.user_id) {
      throw Error("event " + stream[t].event_id + " does not belong to user " + profile.user_id);
    }
    if (t > 0 && stream[t].timestamp < stream[t - 1].timestamp) {
      throw Error("stream for user " + profile.user_id + " is not sorted by timestamp");
    }
  }

  const std::size_t n_events = stream.size();
  std::vector<std::array<double, BaseTable::kWidth>> base(n_events);
  for (std::size_t t = 0; t < n_events; ++t) {
    const auto& a = stream[t].annotations;
    for (int m = 0; m < kMacroCount; ++m) base[t][m] = static_cast<double>(a.macro_levels[m]);
    for (int g = 0; g < kFoodGroupCount; ++g) base[t][kMacroCount + g] = a.food_groups[g];
    base[t][kMacroCount + kFoodGroupCount] = a.food_group_count;
    for (int c = 0; c < kCookingMethodCount; ++c) {
      base[t][kMacroCount + kFoodGroupCount + 1 + c] = a.cooking_methods[c];
    }
    base[t][BaseTable::kWidth - 1] = a.ingredient_count;
  }

  // Previous event index with the same meal type, or -1.
  std::vector<long> prev_same(n_events, -1);
  std::array<long, kMealTypeCount> last_seen;
  last_seen.fill(-1);
  for (std::size_t t = 0; t < n_events; ++t) {
    const auto mt = static_cast<std::size_t>(stream[t].meal_type);
    prev_same[t] = last_seen[mt];
    last_seen[mt] = static_cast<long>(t);
  }

  std::vector<FeatureVector> out(n_events);
  std::vector<double> window;
  window.reserve(4);
  for (std::size_t t = 0; t < n_events; ++t) {
    auto& fv = out[t];
    fv.event_id = stream[t].event_id;
    fv.schema_fingerprint = schema.fingerprint();
    fv.values.resize(schema.size());
    fv.masked.assign(schema.size(), 0);
    for (std::size_t j = 0; j < schema.size(); ++j) {
      const auto& spec = schema[j];
      if (spec.base.kind == BaseKind::PriorHabit) {
        const auto h = profile.habit(static_cast<Habit>(spec.base.index));
        if (!h) {
          throw ValidationError("profile " + profile.user_id,
                                {"missing " + std::string(to_token(static_cast<Habit>(spec.base.index)))});
        }
        fv.values[j] = static_cast<double>(*h);
        continue;
      }
      const int col = BaseTable::column(spec.base);
      if (!spec.window) {
        fv.values[j] = base[t][col];
        continue;
      }
      window.clear();
      bool truncated = false;
      if (spec.window->kind == WindowSpec::Kind::PrevSameMealType) {
        if (prev_same[t] >= 0) {
          window.push_back(base[static_cast<std::size_t>(prev_same[t])][col]);
        } else {
          truncated = true;
        }
      } else {
        const auto need = static_cast<std::size_t>(spec.window->n);
        const std::size_t first = t >= need ? t - need : 0;
        truncated = t < need;
        for (std::size_t s = first; s < t; ++s) window.push_back(base[s][col]);
      }
      window.push_back(base[t][col]);
      fv.values[j] = aggregate(spec.aggregator, window);
      fv.masked[j] = truncated ? 1 : 0;
    }
  }
  return out;
}

namespace {

struct UserSlice {
  std::size_t begin;
  std::size_t end;
};

std::vector<UserSlice> sort_and_slice(std::vector<TrackedEvent>& events,
                                      const std::map<std::string, UserProfile>& profiles) {
  std::sort(events.begin(), events.end(), [](const TrackedEvent& a, const TrackedEvent& b) {
    if (a.user_id != b.user_id) return a.user_id < b.user_id;
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return a.event_id < b.event_id;
  });
  std::vector<UserSlice> slices;
  for (std::size_t i = 0; i < events.size();) {
    std::size_t j = i;
    while (j < events.size() && events[j].user_id == events[i].user_id) ++j;
    if (!profiles.contains(events[i].user_id)) {
      throw ValidationError("user " + events[i].user_id, {"no profile for user"});
    }
    slices.push_back({i, j});
    i = j;
  }
  return slices;
}

}  // namespace

ExtractedDataset extract_dataset_serial(std::vector<TrackedEvent> events,
                                        const std::map<std::string, UserProfile>& profiles,
                                        const FeatureSchema& schema) {
  ExtractedDataset out;
  const auto slices = sort_and_slice(events, profiles);
  out.vectors.resize(events.size());
  for (const auto& s : slices) {
    std::span<const TrackedEvent> stream(events.data() + s.begin, s.end - s.begin);
    auto vecs = extract_features(stream, profiles.at(events[s.begin].user_id), schema);
    std::move(vecs.begin(), vecs.end(), out.vectors.begin() + static_cast<long>(s.begin));
  }
  out.events = std::move(events);
  return out;
}

ExtractedDataset extract_dataset(std::vector<TrackedEvent> events,
                                 const std::map<std::string, UserProfile>& profiles,
                                 const FeatureSchema& schema) {
  ExtractedDataset out;
  const auto slices = sort_and_slice(events, profiles);
  out.vectors.resize(events.size());
  const long n_slices = static_cast<long>(slices.size());
  std::vector<std::string> errors(slices.size());
#pragma omp parallel for schedule(dynamic)
  for (long u = 0; u < n_slices; ++u) {
    const auto& s = slices[static_cast<std::size_t>(u)];
    try {
      std::span<const TrackedEvent> stream(events.data() + s.begin, s.end - s.begin);
      auto vecs = extract_features(stream, profiles.at(events[s.begin].user_id), schema);
      std::move(vecs.begin(), vecs.end(), out.vectors.begin() + static_cast<long>(s.begin));
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(u)] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw Error(e);
  }
  out.events = std::move(events);
  return out;
}

void to_json(nlohmann::json& j, const FeatureSchema& s) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& f : s) {
    nlohmann::json base{{"kind", std::string(kBaseTokens.at(static_cast<std::size_t>(f.base.kind)))}};
    switch (f.base.kind) {
      case BaseKind::MacroLevel: base["key"] = std::string(to_token(static_cast<Macro>(f.base.index))); break;
      case BaseKind::FoodGroup: base["key"] = std::string(to_token(static_cast<FoodGroup>(f.base.index))); break;
      case BaseKind::Cooking: base["key"] = std::string(to_token(static_cast<CookingMethod>(f.base.index))); break;
      case BaseKind::PriorHabit: base["key"] = std::string(to_token(static_cast<Habit>(f.base.index))); break;
      default: break;
    }
    nlohmann::json window = nullptr;
    if (f.window) {
      window = f.window->kind == WindowSpec::Kind::PrevN
                   ? nlohmann::json{{"kind", "prev_n"}, {"n", f.window->n}}
                   : nlohmann::json{{"kind", "prev_same_meal_type"}};
    }
    features.push_back({{"name", f.name},
                        {"base", base},
                        {"aggregator", std::string(to_token(f.aggregator))},
                        {"window", window}});
  }
  j = nlohmann::json{{"format_version", 1}, {"fingerprint", s.fingerprint()}, {"features", features}};
}

void from_json(const nlohmann::json& j, FeatureSchema& s) {
  if (j.value("format_version", 0) != 1) throw Error("unsupported schema format_version");
  auto find_index = [](std::string_view key, auto count, auto tokenizer) -> int {
    for (int i = 0; i < count; ++i) {
      if (tokenizer(i) == key) return i;
    }
    throw Error("unknown base key '" + std::string(key) + "'");
  };
  std::vector<FeatureSpec> out;
  for (const auto& f : j.at("features")) {
    const auto& b = f.at("base");
    const std::string kind = b.at("kind").get<std::string>();
    const std::string key = b.value("key", std::string{});
    AnnotationPath path;
    if (kind == "macro_level") {
      path = AnnotationPath::macro(static_cast<Macro>(
          find_index(key, kMacroCount, [](int i) { return to_token(static_cast<Macro>(i)); })));
    } else if (kind == "food_group") {
      path = AnnotationPath::food_group(static_cast<FoodGroup>(
          find_index(key, kFoodGroupCount, [](int i) { return to_token(static_cast<FoodGroup>(i)); })));
    } else if (kind == "food_group_count") {
      path = AnnotationPath::food_group_count();
    } else if (kind == "cooking") {
      path = AnnotationPath::cooking(static_cast<CookingMethod>(find_index(
          key, kCookingMethodCount, [](int i) { return to_token(static_cast<CookingMethod>(i)); })));
    } else if (kind == "ingredient_count") {
      path = AnnotationPath::ingredient_count();
    } else if (kind == "prior_habit") {
      path = AnnotationPath::habit(static_cast<Habit>(
          find_index(key, kHabitCount, [](int i) { return to_token(static_cast<Habit>(i)); })));
    } else {
      throw Error("unknown base kind '" + kind + "'");
    }
    const std::string agg_tok = f.at("aggregator").get<std::string>();
    const auto agg_it = std::find(kAggTokens.begin(), kAggTokens.end(), agg_tok);
    if (agg_it == kAggTokens.end()) throw Error("unknown aggregator '" + agg_tok + "'");
    const auto agg = static_cast<Aggregator>(agg_it - kAggTokens.begin());
    std::optional<WindowSpec> window;
    if (!f.at("window").is_null()) {
      const auto& w = f.at("window");
      window = w.at("kind").get<std::string>() == "prev_n" ? WindowSpec::prev(w.at("n").get<int>())
                                                           : WindowSpec::same_meal_type();
    }
    auto spec = FeatureSpec::make(path, agg, window);
    if (spec.name != f.at("name").get<std::string>()) {
      throw Error("feature name '" + f.at("name").get<std::string>() +
                  "' does not match its recipe ('" + spec.name + "')");
    }
    out.push_back(std::move(spec));
  }
  s = FeatureSchema(std::move(out));
  if (j.contains("fingerprint") && j.at("fingerprint").get<std::string>() != s.fingerprint()) {
    throw SchemaMismatchError("schema fingerprint does not match its feature list");
  }
}

}  // namespace salient
