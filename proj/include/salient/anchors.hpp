#pragma once

// Anchor rules: conjunctions of predicates on the instance's own feature
// values that, with high estimated precision, fix the model's prediction.
// Precision is estimated by perturbation and certified with sequential
// Hoeffding bounds; rules are grown by beam search.

#include <cstdint>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "salient/classifier.hpp"
#include "salient/feature_domain.hpp"
#include "salient/random.hpp"

namespace salient {

struct AnchorConfig {
  double tau = 0.95;     // required precision
  double delta = 0.05;   // risk of a wrong acceptance, split over checkpoints
  int beam_width = 2;
  int max_length = 4;
  std::size_t initial_samples = 100;  // first checkpoint; later ones double
  std::size_t max_samples = 10000;    // budget per candidate rule
  std::uint64_t seed = 0;

  void validate() const;
};

struct AnchorRule {
  std::vector<Predicate> predicates;
  double precision = 0.0;
  double precision_lower = 0.0;
  double precision_upper = 1.0;
  double coverage = 1.0;  // fraction of perturbation rows satisfying the rule
  int target_class = 1;
  bool proven = false;    // lower bound reached tau within the budget
  std::size_t samples = 0;

  const Predicate* predicate_for(std::size_t feature) const;
};

// Predicates built from the instance's values: "= v" for booleans and
// ">= v" / "<= v" for everything else. Predicates every domain value
// satisfies are omitted.
std::vector<Predicate> anchor_candidates(RowView x, const FeatureSchema& schema);

// Perturbation sampler: each draw starts from a random source row; every
// anchored feature is then replaced by a value drawn from the source rows
// whose value for that feature satisfies the rule (the instance's own value
// when none does).
class AnchorSampler {
 public:
  AnchorSampler(RowView x, const FeatureMatrix& source, std::vector<Predicate> predicates);
  void draw(Rng& rng, RowBuffer& out) const;

 private:
  struct Pool {
    std::size_t feature;
    std::vector<double> values;
    std::vector<std::uint8_t> masked;
  };
  const FeatureMatrix& source_;
  std::vector<Pool> pools_;
};

double rule_coverage(const std::vector<Predicate>& predicates, const FeatureMatrix& source);

// Plain Monte-Carlo precision estimate with `n` fresh perturbations.
double estimate_precision(const Classifier& model, RowView x, const std::vector<Predicate>& predicates,
                          const FeatureMatrix& source, std::size_t n, std::uint64_t seed);

// Shortest rule whose precision lower bound reaches tau (ties: higher
// coverage); otherwise the rule with the best lower bound, flagged unproven.
// Candidates of one beam level are estimated concurrently, each with its own
// rule-seeded stream, so the result equals the serial reference.
AnchorRule find_anchor(const Classifier& model, RowView x, const FeatureMatrix& source,
                       const FeatureSchema& schema, const AnchorConfig& config = {});
AnchorRule find_anchor_serial(const Classifier& model, RowView x, const FeatureMatrix& source,
                              const FeatureSchema& schema, const AnchorConfig& config = {});

void to_json(nlohmann::json& j, const AnchorRule& r);
// Adds rendered text per predicate.
nlohmann::json anchor_to_json(const AnchorRule& r, const FeatureSchema& schema);

}  // namespace salient
