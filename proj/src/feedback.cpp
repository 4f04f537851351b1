#include "salient/feedback.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>

#include <nlohmann/json.hpp>

#include "salient/error.hpp"

namespace salient {

namespace {

constexpr std::array<std::string_view, kMacroCount> kMacroNouns{"calories", "carbs", "protein", "fat", "fiber"};
constexpr std::array<std::string_view, 5> kCategoryOrder{"prior habits", "macronutrients", "food groups",
                                                         "cooking methods", "ingredients"};

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::string base_subject(const AnnotationPath& b) {
  switch (b.kind) {
    case BaseKind::MacroLevel: return lower(macro_word(static_cast<Macro>(b.index))) + " level";
    case BaseKind::FoodGroup: return lower(food_group_word(static_cast<FoodGroup>(b.index)));
    case BaseKind::FoodGroupCount: return "number of food groups";
    case BaseKind::Cooking: return lower(cooking_word(static_cast<CookingMethod>(b.index))) + " cooking";
    case BaseKind::IngredientCount: return "number of ingredients";
    case BaseKind::PriorHabit: return lower(habit_word(static_cast<Habit>(b.index))) + " eating habit";
  }
  return {};
}

std::string window_phrase(const WindowSpec& w) {
  if (w.kind == WindowSpec::Kind::PrevSameMealType) return "this and the previous same-type meal";
  return "recent " + std::to_string(w.length()) + " meals";
}

std::string change_reference(const WindowSpec& w) {
  if (w.kind == WindowSpec::Kind::PrevSameMealType) return "the previous meal of the same type";
  if (w.n == 1) return "the previous meal";
  return "the previous " + std::to_string(w.n) + " meals";
}

std::string count_noun(const AnnotationPath& b, long n) {
  const bool one = n == 1;
  if (b.kind == BaseKind::FoodGroupCount) return one ? "food group" : "food groups";
  return one ? "ingredient" : "ingredients";
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

std::size_t category_rank(const std::string& c) {
  for (std::size_t i = 0; i < kCategoryOrder.size(); ++i) {
    if (kCategoryOrder[i] == c) return i;
  }
  return kCategoryOrder.size();
}

std::string item_line(const FeedbackItem& item) {
  std::string line = item.statement;
  if (item.mode == FeedbackMode::Manual) line += ": " + join(item.choices, " / ");
  if (item.why) line += ", " + *item.why;
  return line;
}

}  // namespace

std::string_view to_token(CardStatus s) {
  switch (s) {
    case CardStatus::Full: return "full";
    case CardStatus::SalientOnly: return "salient_only";
    case CardStatus::Omitted: return "omitted";
  }
  return "?";
}

std::optional<CardStatus> parse_card_status(std::string_view s) {
  if (s == "full") return CardStatus::Full;
  if (s == "salient_only") return CardStatus::SalientOnly;
  if (s == "omitted") return CardStatus::Omitted;
  return std::nullopt;
}

std::string feature_category(const FeatureSpec& spec) {
  switch (spec.base.kind) {
    case BaseKind::PriorHabit: return "prior habits";
    case BaseKind::MacroLevel: return "macronutrients";
    case BaseKind::FoodGroup:
    case BaseKind::FoodGroupCount: return "food groups";
    case BaseKind::Cooking: return "cooking methods";
    case BaseKind::IngredientCount: return "ingredients";
  }
  return "other";
}

std::string feature_subject(const FeatureSpec& spec) {
  const auto base = base_subject(spec.base);
  if (!spec.window) {
    switch (spec.base.kind) {
      case BaseKind::PriorHabit: return "prior " + base;
      case BaseKind::MacroLevel: return base;
      default: return base + " in this meal";
    }
  }
  const auto window = window_phrase(*spec.window);
  switch (spec.aggregator) {
    case Aggregator::Mean:
      if (spec.base.is_boolean()) return "share of " + window + " with " + base;
      return "average " + base + " over " + window;
    case Aggregator::SD: return "variation in " + base + " over " + window;
    case Aggregator::Trend: return "trend in " + base + " over " + window;
    case Aggregator::Change: return "change in " + base + " compared with " + change_reference(*spec.window);
    case Aggregator::Highest:
      if (spec.base.is_boolean()) return base + " in any of " + window;
      return "highest " + base + " over " + window;
    case Aggregator::Identity: break;
  }
  return base;
}

std::string auto_statement(const FeatureSpec& spec, double value) {
  const auto label = value_label(spec, value);
  const auto& b = spec.base;
  if (b.kind == BaseKind::PriorHabit) {
    return std::string(habit_word(static_cast<Habit>(b.index))) + ": " + label;
  }
  if (!spec.window) {
    switch (b.kind) {
      case BaseKind::MacroLevel:
        return label + " level of " + std::string(kMacroNouns.at(static_cast<std::size_t>(b.index)));
      case BaseKind::FoodGroup: {
        const auto g = lower(food_group_word(static_cast<FoodGroup>(b.index)));
        return value > 0.5 ? "Has " + g : "No " + g;
      }
      case BaseKind::Cooking: {
        const auto c = cooking_word(static_cast<CookingMethod>(b.index));
        return value > 0.5 ? std::string(c) + " cooking" : "No " + lower(c) + " cooking";
      }
      default: return label + " " + count_noun(b, std::lround(value));
    }
  }
  if (spec.aggregator == Aggregator::Mean && b.is_boolean()) {
    const std::string word = b.kind == BaseKind::Cooking
                                 ? std::string(cooking_word(static_cast<CookingMethod>(b.index))) + " cooking"
                                 : std::string(food_group_word(static_cast<FoodGroup>(b.index)));
    return word + " in " + label + " of " + window_phrase(*spec.window);
  }
  return capitalize(feature_subject(spec)) + ": " + label;
}

std::string manual_question(const FeatureSpec& spec) {
  if (!spec.window && spec.base.kind == BaseKind::FoodGroup) {
    return "Did this meal include " + lower(food_group_word(static_cast<FoodGroup>(spec.base.index)));
  }
  if (!spec.window && spec.base.kind == BaseKind::Cooking) {
    return "Was this meal " + lower(cooking_word(static_cast<CookingMethod>(spec.base.index)));
  }
  return "Estimate the " + feature_subject(spec);
}

std::string why_text(const Predicate& p, const FeatureSpec& spec) {
  const auto x = value_label(spec, p.threshold);
  std::string phrase;
  switch (p.op) {
    case CompareOp::Ge: phrase = x + " or above"; break;
    case CompareOp::Le: phrase = x + " or below"; break;
    case CompareOp::Gt: phrase = "above " + x; break;
    case CompareOp::Lt: phrase = "below " + x; break;
    case CompareOp::Eq: phrase = x; break;
  }
  return "because " + feature_subject(spec) + " was " + phrase;
}

FeedbackItem make_item(const FeatureSpec& spec, double value, FeedbackMode mode) {
  FeedbackItem item;
  item.feature = spec.name;
  item.label = capitalize(feature_subject(spec));
  item.category = feature_category(spec);
  item.mode = mode;
  if (mode == FeedbackMode::Auto) {
    item.value = value_label(spec, value);
    item.statement = auto_statement(spec, value);
  } else {
    item.statement = manual_question(spec);
    item.choices = domain_labels(spec);
  }
  return item;
}

FeedbackCard assemble_card(const SaliencyReport& report, const FeatureVector& x, const FeatureSchema& schema) {
  if (report.event_id != x.event_id) {
    throw Error("report for event '" + report.event_id + "' does not match feature vector of '" + x.event_id + "'");
  }
  if (x.values.size() != schema.size()) throw SchemaMismatchError("feature vector width does not match the schema");
  FeedbackCard card;
  card.event_id = x.event_id;
  if (report.decision == Decision::Skip) {
    card.status = CardStatus::Omitted;
    card.on_demand_expansion = true;
    card.stub = std::string(kOmittedStub);
    return card;
  }
  card.status = CardStatus::SalientOnly;
  card.on_demand_expansion = true;
  for (const auto& s : report.selected) {
    const auto& spec = schema[s.feature];
    auto item = make_item(spec, x.values[s.feature], s.mode);
    item.weight = s.weight;
    if (s.why) item.why = why_text(*s.why, spec);
    card.items.push_back(std::move(item));
  }
  return card;
}

FeedbackCard full_card(const FeatureVector& x, const FeatureSchema& schema, FeedbackMode mode) {
  if (x.values.size() != schema.size()) throw SchemaMismatchError("feature vector width does not match the schema");
  FeedbackCard card;
  card.event_id = x.event_id;
  card.status = CardStatus::Full;
  card.on_demand_expansion = false;
  for (std::size_t j = 0; j < schema.size(); ++j) card.items.push_back(make_item(schema[j], x.values[j], mode));
  std::stable_sort(card.items.begin(), card.items.end(), [](const FeedbackItem& a, const FeedbackItem& b) {
    return category_rank(a.category) < category_rank(b.category);
  });
  return card;
}

FeedbackCard nutrition_card(const TrackedEvent& event) {
  FeedbackCard card;
  card.event_id = event.event_id;
  card.status = CardStatus::Full;
  card.on_demand_expansion = false;
  const auto& a = event.annotations;
  for (int m = 0; m < kMacroCount; ++m) {
    const auto macro = static_cast<Macro>(m);
    FeedbackItem item;
    item.feature = AnnotationPath::macro(macro).label();
    item.label = std::string(macro_word(macro));
    item.category = "macronutrients";
    item.value = std::string(level_word(a.macro(macro)));
    item.statement = *item.value + " level of " + std::string(kMacroNouns[static_cast<std::size_t>(m)]);
    card.items.push_back(std::move(item));
  }
  std::vector<std::string> groups;
  for (int g = 0; g < kFoodGroupCount; ++g) {
    if (a.food_groups[g]) groups.emplace_back(food_group_word(static_cast<FoodGroup>(g)));
  }
  std::vector<std::string> methods;
  for (int c = 0; c < kCookingMethodCount; ++c) {
    if (a.cooking_methods[c]) methods.emplace_back(cooking_word(static_cast<CookingMethod>(c)));
  }
  auto list_item = [&](std::string feature, std::string label, std::string category,
                       const std::vector<std::string>& values) {
    FeedbackItem item;
    item.feature = std::move(feature);
    item.label = label;
    item.category = std::move(category);
    item.value = values.empty() ? std::string("None") : join(values, ", ");
    item.statement = label + ": " + *item.value;
    card.items.push_back(std::move(item));
  };
  list_item("Meal Food Groups", "Food groups", "food groups", groups);
  list_item("Meal Cooking Methods", "Cooking methods", "cooking methods", methods);
  FeedbackItem ingredients;
  ingredients.feature = AnnotationPath::ingredient_count().label();
  ingredients.label = "Ingredients";
  ingredients.category = "ingredients";
  ingredients.value = std::to_string(a.ingredient_count);
  ingredients.statement = *ingredients.value + (a.ingredient_count == 1 ? " ingredient" : " ingredients");
  card.items.push_back(std::move(ingredients));
  return card;
}

std::vector<std::string> render_text(const FeedbackCard& card) {
  std::vector<std::string> out;
  out.reserve(card.items.size());
  for (const auto& item : card.items) out.push_back(item_line(item));
  return out;
}

void to_json(nlohmann::json& j, const FeedbackItem& item) {
  j = nlohmann::json{{"feature", item.feature},
                     {"label", item.label},
                     {"category", item.category},
                     {"mode", std::string(to_token(item.mode))},
                     {"value", item.value ? nlohmann::json(*item.value) : nlohmann::json(nullptr)},
                     {"statement", item.statement},
                     {"choices", item.choices},
                     {"why", item.why ? nlohmann::json(*item.why) : nlohmann::json(nullptr)},
                     {"weight", item.weight ? nlohmann::json(*item.weight) : nlohmann::json(nullptr)},
                     {"text", item_line(item)}};
}

void from_json(const nlohmann::json& j, FeedbackItem& item) {
  item.feature = j.at("feature").get<std::string>();
  item.label = j.at("label").get<std::string>();
  item.category = j.at("category").get<std::string>();
  const auto mode = parse_mode(j.at("mode").get<std::string>());
  if (!mode) throw ValidationError("feedback item", {"unknown mode"});
  item.mode = *mode;
  item.value = j.at("value").is_null() ? std::nullopt : std::optional(j.at("value").get<std::string>());
  item.statement = j.at("statement").get<std::string>();
  item.choices = j.at("choices").get<std::vector<std::string>>();
  item.why = j.at("why").is_null() ? std::nullopt : std::optional(j.at("why").get<std::string>());
  item.weight = j.at("weight").is_null() ? std::nullopt : std::optional(j.at("weight").get<double>());
}

void to_json(nlohmann::json& j, const FeedbackCard& card) {
  j = nlohmann::json{{"format_version", kCardFormatVersion},
                     {"event_id", card.event_id},
                     {"status", std::string(to_token(card.status))},
                     {"on_demand_expansion", card.on_demand_expansion},
                     {"stub", card.stub ? nlohmann::json(*card.stub) : nlohmann::json(nullptr)},
                     {"items", card.items}};
}

void from_json(const nlohmann::json& j, FeedbackCard& card) {
  if (j.at("format_version").get<int>() != kCardFormatVersion) {
    throw Error("unsupported card format_version " + j.at("format_version").dump());
  }
  card.event_id = j.at("event_id").get<std::string>();
  const auto status = parse_card_status(j.at("status").get<std::string>());
  if (!status) throw ValidationError("feedback card", {"unknown status"});
  card.status = *status;
  card.on_demand_expansion = j.at("on_demand_expansion").get<bool>();
  card.stub = j.at("stub").is_null() ? std::nullopt : std::optional(j.at("stub").get<std::string>());
  card.items = j.at("items").get<std::vector<FeedbackItem>>();
}

}  // namespace salient
