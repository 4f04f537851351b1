#include "salient/dataset.hpp"

#include <algorithm>

#include "salient/error.hpp"

namespace salient {

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols, std::string fingerprint)
    : rows_(rows),
      cols_(cols),
      fingerprint_(std::move(fingerprint)),
      values_(rows * cols, 0.0),
      masked_(rows * cols, 0) {}

FeatureMatrix FeatureMatrix::from_vectors(std::span<const FeatureVector> vectors) {
  if (vectors.empty()) return {};
  FeatureMatrix m(vectors.size(), vectors.front().values.size(), vectors.front().schema_fingerprint);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const auto& v = vectors[i];
    if (v.values.size() != m.cols_ || v.schema_fingerprint != m.fingerprint_) {
      throw SchemaMismatchError("feature vector " + v.event_id + " does not match the matrix schema");
    }
    m.set_row(i, view_of(v));
  }
  return m;
}

FeatureMatrix FeatureMatrix::from_rows(const std::vector<std::vector<double>>& rows,
                                       std::string fingerprint) {
  if (rows.empty()) return {};
  FeatureMatrix m(rows.size(), rows.front().size(), std::move(fingerprint));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols_) throw Error("ragged rows");
    std::copy(rows[i].begin(), rows[i].end(), m.values_.begin() + static_cast<long>(i * m.cols_));
  }
  return m;
}

void FeatureMatrix::set_row(std::size_t i, RowView r) {
  std::copy(r.values.begin(), r.values.end(), values_.begin() + static_cast<long>(i * cols_));
  for (std::size_t j = 0; j < cols_; ++j) masked_[i * cols_ + j] = r.is_masked(j) ? 1 : 0;
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> rows) const {
  FeatureMatrix m(rows.size(), cols_, fingerprint_);
  for (std::size_t i = 0; i < rows.size(); ++i) m.set_row(i, row(rows[i]));
  return m;
}

FeatureMatrix FeatureMatrix::select_columns(std::span<const std::size_t> cols,
                                            std::string fingerprint) const {
  FeatureMatrix m(rows_, cols.size(), std::move(fingerprint));
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t k = 0; k < cols.size(); ++k) {
      m.set(i, k, value(i, cols[k]), is_masked(i, cols[k]));
    }
  }
  return m;
}

std::vector<double> FeatureMatrix::column(std::size_t j) const {
  std::vector<double> out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i] = value(i, j);
  return out;
}

void RowBuffer::assign(RowView r) {
  values.assign(r.values.begin(), r.values.end());
  masked.resize(values.size());
  for (std::size_t j = 0; j < values.size(); ++j) masked[j] = r.is_masked(j) ? 1 : 0;
}

}  // namespace salient
