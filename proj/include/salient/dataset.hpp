#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "salient/features.hpp"

namespace salient {

// Read-only view of one row: feature values plus the insufficient-history
// mask. An empty mask means nothing is masked.
struct RowView {
  std::span<const double> values;
  std::span<const std::uint8_t> masked;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t j) const { return values[j]; }
  bool is_masked(std::size_t j) const { return !masked.empty() && masked[j] != 0; }
};

inline RowView view_of(const FeatureVector& v) { return {v.values, v.masked}; }

// Dense row-major feature matrix tagged with the schema fingerprint.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols, std::string fingerprint = {});

  static FeatureMatrix from_vectors(std::span<const FeatureVector> vectors);
  // Unmasked matrix from plain rows (tests, synthetic data).
  static FeatureMatrix from_rows(const std::vector<std::vector<double>>& rows,
                                 std::string fingerprint = {});

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  const std::string& fingerprint() const { return fingerprint_; }

  RowView row(std::size_t i) const {
    return {std::span<const double>(values_.data() + i * cols_, cols_),
            std::span<const std::uint8_t>(masked_.data() + i * cols_, cols_)};
  }
  double value(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }
  bool is_masked(std::size_t i, std::size_t j) const { return masked_[i * cols_ + j] != 0; }
  void set(std::size_t i, std::size_t j, double v, bool masked = false) {
    values_[i * cols_ + j] = v;
    masked_[i * cols_ + j] = masked ? 1 : 0;
  }
  void set_row(std::size_t i, RowView r);

  FeatureMatrix select_rows(std::span<const std::size_t> rows) const;
  FeatureMatrix select_columns(std::span<const std::size_t> cols, std::string fingerprint) const;
  std::vector<double> column(std::size_t j) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::string fingerprint_;
  std::vector<double> values_;
  std::vector<std::uint8_t> masked_;
};

// Owned copy of a single row, used for counterfactuals and perturbations.
struct RowBuffer {
  std::vector<double> values;
  std::vector<std::uint8_t> masked;

  RowBuffer() = default;
  explicit RowBuffer(RowView r)
      : values(r.values.begin(), r.values.end()),
        masked(r.masked.empty() ? std::vector<std::uint8_t>(r.values.size(), 0)
                                : std::vector<std::uint8_t>(r.masked.begin(), r.masked.end())) {}

  RowView view() const { return {values, masked}; }
  void assign(RowView r);
};

}  // namespace salient
