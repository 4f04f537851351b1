#include "salient/feature_domain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>

#include "salient/error.hpp"

namespace salient {

namespace {

constexpr double kEqTol = 1e-9;

std::vector<double> base_domain(const AnnotationPath& base) {
  int hi = 0;
  switch (base.kind) {
    case BaseKind::MacroLevel: hi = 2; break;
    case BaseKind::FoodGroup:
    case BaseKind::Cooking: hi = 1; break;
    case BaseKind::FoodGroupCount: hi = kFoodGroupCount; break;
    case BaseKind::IngredientCount: hi = kIngredientDomainCap; break;
    case BaseKind::PriorHabit: hi = kFrequencyCount - 1; break;
  }
  std::vector<double> out;
  for (int v = 0; v <= hi; ++v) out.push_back(v);
  return out;
}

double base_range(const AnnotationPath& base) {
  const auto d = base_domain(base);
  return d.back() - d.front();
}

std::vector<double> enumerate_domain(const FeatureSpec& spec) {
  const auto base = base_domain(spec.base);
  if (!spec.window) return base;
  std::vector<double> out;
  const int full = spec.window->length();
  std::vector<double> window;
  std::vector<std::size_t> digits;
  for (int len = 1; len <= full; ++len) {
    digits.assign(static_cast<std::size_t>(len), 0);
    window.assign(static_cast<std::size_t>(len), base[0]);
    while (true) {
      for (int k = 0; k < len; ++k) window[k] = base[digits[k]];
      out.push_back(aggregate(spec.aggregator, window));
      int pos = 0;
      while (pos < len && ++digits[pos] == base.size()) digits[pos++] = 0;
      if (pos == len) break;
    }
  }
  std::sort(out.begin(), out.end());
  std::vector<double> uniq;
  for (double v : out) {
    if (uniq.empty() || v - uniq.back() > kEqTol) uniq.push_back(v);
  }
  return uniq;
}

std::string trim_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s(buf);
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  if (s == "-0") s = "0";
  return s;
}

std::string fraction_label(double v, int window_length) {
  for (int len = window_length; len >= 1; --len) {
    const double k = v * len;
    if (std::fabs(k - std::round(k)) < 1e-9) {
      return std::to_string(static_cast<int>(std::lround(k))) + "/" + std::to_string(len);
    }
  }
  return trim_number(v);
}

Level nearest_level(double v) {
  const long r = std::lround(std::clamp(v, 0.0, 2.0));
  return static_cast<Level>(r);
}

}  // namespace

ValueKind value_kind(const FeatureSpec& spec) {
  if (spec.base.kind == BaseKind::PriorHabit) return ValueKind::Ordinal;
  switch (spec.aggregator) {
    case Aggregator::Identity:
    case Aggregator::Highest:
      if (spec.base.is_boolean()) return ValueKind::Boolean;
      if (spec.base.is_level()) return ValueKind::Ordinal;
      return ValueKind::Count;
    case Aggregator::Mean:
      return spec.base.is_boolean() ? ValueKind::Fraction : ValueKind::Continuous;
    case Aggregator::Change: return ValueKind::Ordinal;
    case Aggregator::SD:
    case Aggregator::Trend: return ValueKind::Continuous;
  }
  return ValueKind::Continuous;
}

const std::vector<double>& feature_domain(const FeatureSpec& spec) {
  static std::mutex mu;
  static std::map<std::string, std::vector<double>> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(spec.name);
  if (it == cache.end()) it = cache.emplace(spec.name, enumerate_domain(spec)).first;
  return it->second;
}

std::string value_label(const FeatureSpec& spec, double value) {
  if (spec.base.kind == BaseKind::PriorHabit) {
    const auto f = static_cast<Frequency>(std::clamp<long>(std::lround(value), 0, kFrequencyCount - 1));
    if (f == Frequency::Never) return "Never";
    return "Eats " + std::string(frequency_word(f));
  }
  switch (spec.aggregator) {
    case Aggregator::Change:
      if (value < 0) return "Decreased";
      if (value > 0) return "Increased";
      return "Unchanged";
    case Aggregator::Trend:
      if (value < -kEqTol) return "Decreasing";
      if (value > kEqTol) return "Increasing";
      return "Unchanged";
    case Aggregator::SD: {
      if (value <= kEqTol) return "Low";
      return value <= 0.5 * base_range(spec.base) + kEqTol ? "Medium" : "High";
    }
    case Aggregator::Mean:
      if (spec.base.is_boolean()) return fraction_label(value, spec.window->length());
      if (spec.base.is_level()) return std::string(level_word(nearest_level(value)));
      return trim_number(value);
    case Aggregator::Identity:
    case Aggregator::Highest:
      if (spec.base.is_boolean()) return value > 0.5 ? "Has" : "None";
      if (spec.base.is_level()) return std::string(level_word(nearest_level(value)));
      return std::to_string(std::lround(value));
  }
  return trim_number(value);
}

std::vector<std::string> domain_labels(const FeatureSpec& spec) {
  std::vector<std::string> out;
  for (double v : feature_domain(spec)) {
    auto label = value_label(spec, v);
    if (std::find(out.begin(), out.end(), label) == out.end()) out.push_back(std::move(label));
  }
  return out;
}

std::string_view to_symbol(CompareOp op) {
  switch (op) {
    case CompareOp::Ge: return "≥";
    case CompareOp::Le: return "≤";
    case CompareOp::Gt: return ">";
    case CompareOp::Lt: return "<";
    case CompareOp::Eq: return "=";
  }
  return "?";
}

std::string_view to_token(CompareOp op) {
  switch (op) {
    case CompareOp::Ge: return ">=";
    case CompareOp::Le: return "<=";
    case CompareOp::Gt: return ">";
    case CompareOp::Lt: return "<";
    case CompareOp::Eq: return "=";
  }
  return "?";
}

CompareOp parse_compare_op(std::string_view token) {
  if (token == ">=" || token == "≥") return CompareOp::Ge;
  if (token == "<=" || token == "≤") return CompareOp::Le;
  if (token == ">") return CompareOp::Gt;
  if (token == "<") return CompareOp::Lt;
  if (token == "=" || token == "==") return CompareOp::Eq;
  throw Error("unknown comparison operator '" + std::string(token) + "'");
}

bool Predicate::holds(double v) const {
  switch (op) {
    case CompareOp::Ge: return v >= threshold - kEqTol;
    case CompareOp::Le: return v <= threshold + kEqTol;
    case CompareOp::Gt: return v > threshold + kEqTol;
    case CompareOp::Lt: return v < threshold - kEqTol;
    case CompareOp::Eq: return std::fabs(v - threshold) <= kEqTol;
  }
  return false;
}

std::string render_condition(const Predicate& p, const FeatureSpec& spec) {
  return std::string(to_symbol(p.op)) + " " + value_label(spec, p.threshold);
}

std::string render_predicate(const Predicate& p, const FeatureSchema& schema) {
  const auto& spec = schema[p.feature];
  return spec.name + " " + render_condition(p, spec);
}

std::optional<double> nearest_violation(const Predicate& p, const FeatureSpec& spec, double current) {
  std::optional<double> best;
  for (double d : feature_domain(spec)) {
    if (p.holds(d)) continue;
    if (!best || std::fabs(d - current) < std::fabs(*best - current) - kEqTol) best = d;
  }
  return best;
}

}  // namespace salient
