#include "salient/anchors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "salient/error.hpp"

namespace salient {

namespace {

int class_of(double p) { return p > 0.5 ? 1 : 0; }

std::uint64_t rule_hash(const std::vector<Predicate>& preds) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xFF;
      h *= 1099511628211ULL;
    }
  };
  for (const auto& p : preds) {
    mix(p.feature);
    mix(static_cast<std::uint64_t>(p.op));
    mix(std::bit_cast<std::uint64_t>(p.threshold));
  }
  return h;
}

std::vector<std::size_t> checkpoints(const AnchorConfig& cfg) {
  std::vector<std::size_t> out;
  for (std::size_t n = cfg.initial_samples; n < cfg.max_samples; n *= 2) out.push_back(n);
  out.push_back(cfg.max_samples);
  return out;
}

enum class Verdict { Accepted, Rejected, Undecided };

struct Candidate {
  std::vector<std::size_t> members;  // indices into the predicate pool, ascending
  std::vector<Predicate> predicates;
  double precision = 0.0;
  double lower = 0.0;
  double upper = 1.0;
  double coverage = 1.0;
  std::size_t samples = 0;
  Verdict verdict = Verdict::Undecided;
};

void estimate(const Classifier& model, RowView x, const FeatureMatrix& source, int target,
              const AnchorConfig& cfg, Candidate& c) {
  const auto cps = checkpoints(cfg);
  const double log_term = std::log(2.0 * static_cast<double>(cps.size()) / cfg.delta);
  AnchorSampler sampler(x, source, c.predicates);
  Rng rng(cfg.seed ^ rule_hash(c.predicates));
  RowBuffer z(x);
  std::size_t hits = 0;
  std::size_t n = 0;
  for (std::size_t cp : cps) {
    for (; n < cp; ++n) {
      sampler.draw(rng, z);
      if (class_of(model.probability(z.view())) == target) ++hits;
    }
    const double p = static_cast<double>(hits) / static_cast<double>(n);
    const double eps = std::sqrt(log_term / (2.0 * static_cast<double>(n)));
    c.precision = p;
    c.lower = std::max(0.0, p - eps);
    c.upper = std::min(1.0, p + eps);
    c.samples = n;
    if (c.lower >= cfg.tau) {
      c.verdict = Verdict::Accepted;
      return;
    }
    if (c.upper < cfg.tau) {
      c.verdict = Verdict::Rejected;
      return;
    }
  }
  c.verdict = Verdict::Undecided;
}

AnchorRule to_rule(const Candidate& c, int target) {
  AnchorRule r;
  r.predicates = c.predicates;
  r.precision = c.precision;
  r.precision_lower = c.lower;
  r.precision_upper = c.upper;
  r.coverage = c.coverage;
  r.target_class = target;
  r.proven = c.verdict == Verdict::Accepted;
  r.samples = c.samples;
  return r;
}

bool better_effort(const Candidate& a, const Candidate& b) {
  if (a.lower != b.lower) return a.lower > b.lower;
  if (a.precision != b.precision) return a.precision > b.precision;
  if (a.coverage != b.coverage) return a.coverage > b.coverage;
  return a.members.size() < b.members.size();
}

}  // namespace

void AnchorConfig::validate() const {
  std::vector<std::string> v;
  if (!(tau >= 0.0 && tau <= 1.0)) v.push_back("tau must be in [0, 1]");
  if (!(delta > 0.0 && delta < 1.0)) v.push_back("delta must be in (0, 1)");
  if (beam_width < 1) v.push_back("beam_width must be >= 1");
  if (max_length < 1) v.push_back("max_length must be >= 1");
  if (initial_samples == 0 || max_samples < initial_samples) v.push_back("sample budget is empty");
  if (!v.empty()) throw ValidationError("anchor config", std::move(v));
}

const Predicate* AnchorRule::predicate_for(std::size_t feature) const {
  for (const auto& p : predicates) {
    if (p.feature == feature) return &p;
  }
  return nullptr;
}

std::vector<Predicate> anchor_candidates(RowView x, const FeatureSchema& schema) {
  if (x.size() != schema.size()) throw SchemaMismatchError("instance width does not match the schema");
  std::vector<Predicate> out;
  for (std::size_t j = 0; j < schema.size(); ++j) {
    const auto& spec = schema[j];
    const double v = x[j];
    if (value_kind(spec) == ValueKind::Boolean) {
      out.push_back({j, CompareOp::Eq, v});
      continue;
    }
    const auto& dom = feature_domain(spec);
    for (auto op : {CompareOp::Ge, CompareOp::Le}) {
      const Predicate p{j, op, v};
      const bool trivial = std::all_of(dom.begin(), dom.end(), [&](double d) { return p.holds(d); });
      if (!trivial) out.push_back(p);
    }
  }
  return out;
}

AnchorSampler::AnchorSampler(RowView x, const FeatureMatrix& source, std::vector<Predicate> predicates)
    : source_(source) {
  if (source.rows() == 0) throw Error("anchor perturbation source is empty");
  if (source.cols() != x.size()) throw SchemaMismatchError("perturbation source width does not match the instance");
  std::sort(predicates.begin(), predicates.end(),
            [](const Predicate& a, const Predicate& b) { return a.feature < b.feature; });
  for (std::size_t i = 0; i < predicates.size();) {
    const std::size_t f = predicates[i].feature;
    std::size_t j = i;
    while (j < predicates.size() && predicates[j].feature == f) ++j;
    Pool pool{f, {}, {}};
    for (std::size_t r = 0; r < source.rows(); ++r) {
      const double v = source.value(r, f);
      bool ok = true;
      for (std::size_t k = i; k < j; ++k) ok = ok && predicates[k].holds(v);
      if (ok) {
        pool.values.push_back(v);
        pool.masked.push_back(source.is_masked(r, f) ? 1 : 0);
      }
    }
    if (pool.values.empty()) {
      pool.values.push_back(x[f]);
      pool.masked.push_back(x.is_masked(f) ? 1 : 0);
    }
    pools_.push_back(std::move(pool));
    i = j;
  }
}

void AnchorSampler::draw(Rng& rng, RowBuffer& out) const {
  out.assign(source_.row(rng.below(source_.rows())));
  for (const auto& pool : pools_) {
    const auto k = rng.below(pool.values.size());
    out.values[pool.feature] = pool.values[k];
    out.masked[pool.feature] = pool.masked[k];
  }
}

double rule_coverage(const std::vector<Predicate>& predicates, const FeatureMatrix& source) {
  if (source.rows() == 0) return 0.0;
  std::size_t hit = 0;
  for (std::size_t r = 0; r < source.rows(); ++r) {
    const auto row = source.row(r);
    if (std::all_of(predicates.begin(), predicates.end(), [&](const Predicate& p) { return p.holds(row); })) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(source.rows());
}

double estimate_precision(const Classifier& model, RowView x, const std::vector<Predicate>& predicates,
                          const FeatureMatrix& source, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw Error("precision estimate needs at least one sample");
  const int target = class_of(model.probability(x));
  AnchorSampler sampler(x, source, predicates);
  Rng rng(seed);
  RowBuffer z(x);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sampler.draw(rng, z);
    if (class_of(model.probability(z.view())) == target) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

namespace {

AnchorRule search(const Classifier& model, RowView x, const FeatureMatrix& source, const FeatureSchema& schema,
                  const AnchorConfig& config, bool parallel) {
  config.validate();
  const int target = class_of(model.probability(x));
  const auto pool = anchor_candidates(x, schema);

  Candidate empty;
  estimate(model, x, source, target, config, empty);
  empty.coverage = 1.0;
  if (config.tau <= 0.0 || empty.verdict == Verdict::Accepted) {
    empty.verdict = Verdict::Accepted;
    return to_rule(empty, target);
  }

  Candidate best = empty;
  std::vector<Candidate> beam{empty};
  for (int length = 1; length <= config.max_length; ++length) {
    std::set<std::vector<std::size_t>> seen;
    std::vector<Candidate> expansions;
    for (const auto& parent : beam) {
      for (std::size_t c = 0; c < pool.size(); ++c) {
        const bool feature_used = std::any_of(parent.predicates.begin(), parent.predicates.end(),
                                              [&](const Predicate& p) { return p.feature == pool[c].feature; });
        if (feature_used) continue;
        auto members = parent.members;
        members.insert(std::upper_bound(members.begin(), members.end(), c), c);
        if (!seen.insert(members).second) continue;
        Candidate cand;
        cand.members = members;
        for (auto m : members) cand.predicates.push_back(pool[m]);
        expansions.push_back(std::move(cand));
      }
    }
    if (expansions.empty()) break;
    const long n_exp = static_cast<long>(expansions.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (long e = 0; e < n_exp; ++e) {
      auto& cand = expansions[static_cast<std::size_t>(e)];
      cand.coverage = rule_coverage(cand.predicates, source);
      estimate(model, x, source, target, config, cand);
    }

    const Candidate* accepted = nullptr;
    for (const auto& cand : expansions) {
      if (cand.verdict != Verdict::Accepted) continue;
      if (!accepted || cand.coverage > accepted->coverage ||
          (cand.coverage == accepted->coverage && cand.precision > accepted->precision)) {
        accepted = &cand;
      }
    }
    if (accepted) return to_rule(*accepted, target);

    for (const auto& cand : expansions) {
      if (better_effort(cand, best)) best = cand;
    }
    std::stable_sort(expansions.begin(), expansions.end(), [](const Candidate& a, const Candidate& b) {
      if (a.precision != b.precision) return a.precision > b.precision;
      return a.coverage > b.coverage;
    });
    expansions.resize(std::min(expansions.size(), static_cast<std::size_t>(config.beam_width)));
    beam = std::move(expansions);
  }
  auto rule = to_rule(best, target);
  rule.proven = false;
  return rule;
}

}  // namespace

AnchorRule find_anchor(const Classifier& model, RowView x, const FeatureMatrix& source,
                       const FeatureSchema& schema, const AnchorConfig& config) {
  return search(model, x, source, schema, config, true);
}

AnchorRule find_anchor_serial(const Classifier& model, RowView x, const FeatureMatrix& source,
                              const FeatureSchema& schema, const AnchorConfig& config) {
  return search(model, x, source, schema, config, false);
}

void to_json(nlohmann::json& j, const AnchorRule& r) {
  nlohmann::json preds = nlohmann::json::array();
  for (const auto& p : r.predicates) {
    preds.push_back({{"feature", p.feature}, {"op", std::string(to_token(p.op))}, {"threshold", p.threshold}});
  }
  j = nlohmann::json{{"predicates", preds},
                     {"precision", r.precision},
                     {"precision_lower", r.precision_lower},
                     {"precision_upper", r.precision_upper},
                     {"coverage", r.coverage},
                     {"target_class", r.target_class},
                     {"proven", r.proven},
                     {"samples", r.samples}};
}

nlohmann::json anchor_to_json(const AnchorRule& r, const FeatureSchema& schema) {
  nlohmann::json j = r;
  for (std::size_t i = 0; i < r.predicates.size(); ++i) {
    const auto& p = r.predicates[i];
    j["predicates"][i]["name"] = schema[p.feature].name;
    j["predicates"][i]["text"] = render_predicate(p, schema);
  }
  return j;
}

}  // namespace salient
