#pragma once

// Dimensionality reduction: recursive feature elimination driven by boosted
// tree split gain, and univariate mutual-information ranking.

#include <cstdint>
#include <span>
#include <vector>

#include "salient/dataset.hpp"
#include "salient/gbt.hpp"

namespace salient {

// Quartile cut points (linear interpolation, duplicates removed); a value's
// bin is the number of cut points strictly below it.
std::vector<int> quartile_bins(std::span<const double> column);

// Plug-in mutual information in bits between a discrete feature and the label.
double mutual_information_bits(std::span<const int> bins, std::span<const std::uint8_t> labels);

// Column indices (ascending) of the target_k highest-MI features; ties keep
// the lower index.
std::vector<std::size_t> select_features_mi(const FeatureMatrix& X, std::span<const std::uint8_t> y,
                                            int target_k);

// Repeatedly fits boosted trees and drops the lowest-gain 10% (at least one)
// of the remaining columns until target_k survive. Indices ascending.
std::vector<std::size_t> select_features_rfe(const FeatureMatrix& X, std::span<const std::uint8_t> y,
                                             int target_k, const TrainConfig& config = {});

FeatureSchema select_schema_mi(const FeatureSchema& schema, const FeatureMatrix& X,
                               std::span<const std::uint8_t> y, int target_k);
FeatureSchema select_schema_rfe(const FeatureSchema& schema, const FeatureMatrix& X,
                                std::span<const std::uint8_t> y, int target_k,
                                const TrainConfig& config = {});

}  // namespace salient
