#include <doctest.h>

#include <set>

#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "salient/error.hpp"
#include "salient/feedback.hpp"

using namespace salient;

namespace {

const FeatureSpec& spec(std::string_view name) { return default_schema()[*default_schema().index_of(name)]; }

FeatureVector zero_vector(std::string id = "e1") {
  const auto& s = default_schema();
  return FeatureVector{std::move(id), s.fingerprint(), std::vector<double>(s.size(), 0.0),
                       std::vector<std::uint8_t>(s.size(), 0)};
}

}  // namespace

TEST_CASE("auto statements") {
  CHECK(auto_statement(spec("Meal Macros (Calorie level)"), 0) == "Low level of calories");
  CHECK(auto_statement(spec("Meal Macros (Fat level)"), 2) == "High level of fat");
  CHECK(auto_statement(spec("Meal Food Group (Vegetables)"), 1) == "Has vegetables");
  CHECK(auto_statement(spec("Meal Food Group (Vegetables)"), 0) == "No vegetables");
  CHECK(auto_statement(spec("Meal Cooking (Baked)"), 1) == "Baked cooking");
  CHECK(auto_statement(spec("Meal Cooking (Baked)"), 0) == "No baked cooking");
  CHECK(auto_statement(spec("Meal Food Groups Count"), 3) == "3 food groups");
  CHECK(auto_statement(spec("Meal Food Groups Count"), 1) == "1 food group");
  CHECK(auto_statement(spec("Meal Cooking (Pan/Air Fried) : Mean[Prev3-Current]"), 0.75) ==
        "Pan/Air Fried cooking in 3/4 of recent 4 meals");
  CHECK(auto_statement(spec("Prior Eating Habit (Vegetables)"), 3) == "Vegetables: Eats 4-6x/week");
  CHECK(auto_statement(spec("Meal Macros (Calorie level) : Change[Prev1-Current]"), -1) ==
        "Change in calorie level compared with the previous meal: Decreased");
  CHECK(auto_statement(spec("Meal Macros (Fat level) : Highest[Prev3-Current]"), 2) ==
        "Highest fat level over recent 4 meals: High");
}

TEST_CASE("manual questions") {
  CHECK(manual_question(spec("Meal Macros (Fat level)")) == "Estimate the fat level");
  CHECK(manual_question(spec("Meal Food Group (Vegetables)")) == "Did this meal include vegetables");
  CHECK(manual_question(spec("Meal Cooking (Baked)")) == "Was this meal baked");
  CHECK(manual_question(spec("Meal Cooking (Baked) : SD[Prev2-Current]")) ==
        "Estimate the variation in baked cooking over recent 3 meals");
}

TEST_CASE("why lines") {
  const auto fat = *default_schema().index_of("Meal Macros (Fat level)");
  CHECK(why_text({fat, CompareOp::Ge, 2}, spec("Meal Macros (Fat level)")) == "because fat level was High or above");
  CHECK(why_text({fat, CompareOp::Le, 0}, spec("Meal Macros (Fat level)")) == "because fat level was Low or below");
  const auto& pan = spec("Meal Cooking (Pan/Air Fried) : Mean[Prev3-Current]");
  CHECK(why_text({0, CompareOp::Gt, 0.5}, pan) ==
        "because share of recent 4 meals with pan/air fried cooking was above 2/4");
  const auto& cal = spec("Meal Macros (Calorie level) : Change[Prev1-Current]");
  CHECK(why_text({0, CompareOp::Le, -1}, cal) ==
        "because change in calorie level compared with the previous meal was Decreased or below");
  CHECK(why_text({0, CompareOp::Eq, 1}, spec("Meal Food Group (Vegetables)")) ==
        "because vegetables in this meal was Has");
}

TEST_CASE("salient cards follow the report") {
  const auto& s = default_schema();
  auto x = zero_vector();
  const auto fat = *s.index_of("Meal Macros (Fat level)");
  const auto cal = *s.index_of("Meal Macros (Calorie level)");
  const auto veg = *s.index_of("Meal Food Group (Vegetables)");
  x.values[fat] = 2;
  x.values[veg] = 1;
  SaliencyReport r;
  r.event_id = "e1";
  r.decision = Decision::Show;
  r.selected = {{fat, 0.9, FeedbackMode::Manual, Predicate{fat, CompareOp::Ge, 2}},
                {cal, 0.5, FeedbackMode::Auto, std::nullopt},
                {veg, 0.2, FeedbackMode::Auto, std::nullopt}};
  const auto card = assemble_card(r, x, s);
  CHECK(card.status == CardStatus::SalientOnly);
  REQUIRE(card.items.size() == 3);
  CHECK(card.items[0].feature == s[fat].name);
  CHECK(card.items[0].choices == std::vector<std::string>{"Low", "Medium", "High"});
  CHECK_FALSE(card.items[0].value);
  CHECK(card.items[1].value == "Low");
  CHECK(card.items[1].choices.empty());
  CHECK(render_text(card) == std::vector<std::string>{
                                 "Estimate the fat level: Low / Medium / High, because fat level was High or above",
                                 "Low level of calories", "Has vegetables"});
  r.event_id = "other";
  CHECK_THROWS_AS(assemble_card(r, x, s), Error);
}

TEST_CASE("skipped events become on-demand stubs") {
  SaliencyReport r;
  r.event_id = "e1";
  r.decision = Decision::Skip;
  r.confidence = {0.2, 0.3};
  const auto card = assemble_card(r, zero_vector(), default_schema());
  CHECK(card.status == CardStatus::Omitted);
  CHECK(card.items.empty());
  CHECK(card.on_demand_expansion);
  CHECK(card.stub == std::string(kOmittedStub));
  CHECK(render_text(card).empty());
}

TEST_CASE("full cards cover the schema grouped by category") {
  const auto card = full_card(zero_vector(), default_schema(), FeedbackMode::Manual);
  CHECK(card.status == CardStatus::Full);
  CHECK(card.items.size() == default_schema().size());
  const std::vector<std::string> order{"prior habits", "macronutrients", "food groups", "cooking methods",
                                       "ingredients"};
  std::size_t last = 0;
  for (const auto& item : card.items) {
    const auto pos = static_cast<std::size_t>(std::find(order.begin(), order.end(), item.category) - order.begin());
    REQUIRE(pos < order.size());
    CHECK(pos >= last);
    last = pos;
    CHECK(item.mode == FeedbackMode::Manual);
    CHECK_FALSE(item.value);
    CHECK(item.choices == domain_labels(default_schema()[*default_schema().index_of(item.feature)]));
  }
}

TEST_CASE("nutrition card has eight items in four categories") {
  auto e = fixtures::meal("m1", 0);
  e.annotations.macro_levels[static_cast<int>(Macro::Calorie)] = Level::Low;
  fixtures::set_groups(e, {FoodGroup::Grains, FoodGroup::Vegetables});
  e.annotations.cooking_methods[static_cast<int>(CookingMethod::Baked)] = true;
  e.annotations.ingredient_count = 4;
  const auto card = nutrition_card(e);
  REQUIRE(card.items.size() == 8);
  std::set<std::string> cats;
  for (const auto& i : card.items) cats.insert(i.category);
  CHECK(cats.size() == 4);
  const auto lines = render_text(card);
  CHECK(lines[0] == "Low level of calories");
  CHECK(lines[5] == "Food groups: Grains, Vegetables");
  CHECK(lines[6] == "Cooking methods: Baked");
  CHECK(lines[7] == "4 ingredients");
}

TEST_CASE("card JSON round-trips") {
  Rng rng(3);
  const auto& s = default_schema();
  for (int trial = 0; trial < 50; ++trial) {
    auto x = zero_vector("e" + std::to_string(trial));
    for (std::size_t j = 0; j < s.size(); ++j) {
      const auto& dom = feature_domain(s[j]);
      x.values[j] = dom[rng.below(dom.size())];
    }
    const auto card = full_card(x, s, rng.bernoulli(0.5) ? FeedbackMode::Manual : FeedbackMode::Auto);
    const nlohmann::json j = card;
    CHECK(j["format_version"] == kCardFormatVersion);
    CHECK(j["items"][0].contains("text"));
    CHECK(nlohmann::json::parse(j.dump()).get<FeedbackCard>() == card);
  }
  nlohmann::json bad = full_card(zero_vector(), s);
  bad["format_version"] = 99;
  CHECK_THROWS_AS((void)bad.get<FeedbackCard>(), Error);
}
