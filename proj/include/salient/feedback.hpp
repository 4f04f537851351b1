#pragma once

// Feedback cards: what the reviewer sees for one meal. Auto items state the
// value, Manual items ask the user to estimate it, and each item may carry a
// one-line reason derived from the anchor rule.

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "salient/domain.hpp"
#include "salient/feature_domain.hpp"
#include "salient/saliency.hpp"

namespace salient {

enum class CardStatus : std::uint8_t { Full, SalientOnly, Omitted };

std::string_view to_token(CardStatus s);
std::optional<CardStatus> parse_card_status(std::string_view s);

inline constexpr std::string_view kOmittedStub = "No salient feedback for this meal — tap to expand";
inline constexpr int kCardFormatVersion = 1;

struct FeedbackItem {
  std::string feature;   // schema feature name (or annotation label on nutrition cards)
  std::string label;     // short display label
  std::string category;  // "macronutrients", "food groups", ...
  FeedbackMode mode = FeedbackMode::Auto;
  std::optional<std::string> value;    // Auto only
  std::string statement;               // Auto: rendered statement; Manual: question
  std::vector<std::string> choices;    // Manual only: the feature's domain labels
  std::optional<std::string> why;      // "because fat level was High or above"
  std::optional<double> weight;        // fused saliency weight when selected

  bool operator==(const FeedbackItem&) const = default;
};

struct FeedbackCard {
  std::string event_id;
  CardStatus status = CardStatus::Omitted;
  std::vector<FeedbackItem> items;
  bool on_demand_expansion = true;
  std::optional<std::string> stub;

  bool operator==(const FeedbackCard&) const = default;
};

// Category of a feature for grouped display.
std::string feature_category(const FeatureSpec& spec);

// Phrase naming what a feature measures ("fat level", "change in calorie
// level compared with the previous meal", ...).
std::string feature_subject(const FeatureSpec& spec);

// "Low level of calories", "Pan/Air Fried cooking in 3/4 of recent 4 meals", ...
std::string auto_statement(const FeatureSpec& spec, double value);
// "Estimate the fat level", "Did this meal include vegetables"
std::string manual_question(const FeatureSpec& spec);
// "because fat level was High or above"
std::string why_text(const Predicate& p, const FeatureSpec& spec);

FeedbackItem make_item(const FeatureSpec& spec, double value, FeedbackMode mode);

// Show reports become SalientOnly cards with one item per selected feature in
// report order; Skip reports become Omitted stubs. Throws Error when the
// report and vector describe different events.
FeedbackCard assemble_card(const SaliencyReport& report, const FeatureVector& x, const FeatureSchema& schema);

// Every schema feature in one mode, grouped by category.
FeedbackCard full_card(const FeatureVector& x, const FeatureSchema& schema,
                       FeedbackMode mode = FeedbackMode::Auto);

// Current-meal nutrition summary: five macro levels, food groups, cooking
// methods and ingredient count (eight items in four categories).
FeedbackCard nutrition_card(const TrackedEvent& event);

// One display string per item, in card order. Manual items list their
// choices; a reason is appended after a comma.
std::vector<std::string> render_text(const FeedbackCard& card);

void to_json(nlohmann::json& j, const FeedbackItem& item);
void from_json(const nlohmann::json& j, FeedbackItem& item);
void to_json(nlohmann::json& j, const FeedbackCard& card);
void from_json(const nlohmann::json& j, FeedbackCard& card);

}  // namespace salient
