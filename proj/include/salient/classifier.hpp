#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "salient/dataset.hpp"

namespace salient {

inline double logistic(double margin) {
  if (margin >= 0) return 1.0 / (1.0 + std::exp(-margin));
  const double e = std::exp(margin);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

// Anything that scores a feature row. Margins are log-odds; probabilities are
// the logistic of the margin. Implementations are immutable after fitting and
// safe to share across threads.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual double margin(RowView x) const = 0;
  virtual double probability(RowView x) const { return logistic(margin(x)); }

  virtual const std::string& schema_fingerprint() const = 0;
  virtual std::string_view kind() const = 0;
};

// Checked entry point: the vector must carry the model's schema fingerprint.
double predict_proba(const Classifier& model, const FeatureVector& x);

// Probabilities for every row. The parallel kernel splits rows across
// threads; the serial reference is kept for tests and benchmarks.
std::vector<double> predict_batch(const Classifier& model, const FeatureMatrix& X);
std::vector<double> predict_batch_serial(const Classifier& model, const FeatureMatrix& X);

}  // namespace salient
