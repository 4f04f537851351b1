#include "salient/counterfactual.hpp"

#include "salient/error.hpp"

namespace salient {

RowBuffer counterfactual_row(RowView x, const Predicate& rule, const FeatureSchema& schema) {
  if (x.size() != schema.size()) throw SchemaMismatchError("instance width does not match the schema");
  if (rule.feature >= schema.size()) throw Error("rule references a column outside the schema");
  const auto& spec = schema[rule.feature];
  const auto target = nearest_violation(rule, spec, x[rule.feature]);
  if (!target) {
    throw Error("no value of '" + spec.name + "' violates " + render_condition(rule, spec));
  }
  RowBuffer out(x);
  out.values[rule.feature] = *target;
  out.masked[rule.feature] = 0;
  return out;
}

double signed_confidence_change(const Classifier& model, RowView x, const Predicate& rule,
                                const FeatureSchema& schema) {
  const auto cf = counterfactual_row(x, rule, schema);
  const double p = model.probability(x);
  const double p_cf = model.probability(cf.view());
  const double y = p > 0.5 ? 1.0 : -1.0;
  return y * (p - p_cf);
}

Predicate instance_predicate(RowView x, std::size_t feature, const FeatureSchema& schema, double reference) {
  const auto& spec = schema[feature];
  const double v = x[feature];
  if (value_kind(spec) == ValueKind::Boolean) return {feature, CompareOp::Eq, v};
  const Predicate ge{feature, CompareOp::Ge, v};
  const Predicate le{feature, CompareOp::Le, v};
  const auto& preferred = v >= reference ? ge : le;
  const auto& other = v >= reference ? le : ge;
  if (nearest_violation(preferred, spec, v)) return preferred;
  return other;
}

Predicate rule_for_feature(const AnchorRule* anchor, RowView x, std::size_t feature,
                           const FeatureSchema& schema, double reference) {
  if (anchor) {
    if (const auto* p = anchor->predicate_for(feature)) return *p;
  }
  return instance_predicate(x, feature, schema, reference);
}

}  // namespace salient
