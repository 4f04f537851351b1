#pragma once

// Service configuration, read from a key = value text file. Blank lines and
// lines starting with '#' are ignored.
//
//   data_dir          store and model directory            (salient-data)
//   seed              training, CV and background seed     (7)
//   n_trees max_depth learning_rate lambda gamma
//   min_child_weight subsample                            boosting
//   alpha_manual alpha_auto                                mode weights
//   k threshold policy                                     feedback policy
//   tau delta beam_width max_anchor_length                 anchors
//   min_rows cv_folds target_features feature_selection
//   background_cap                                         training pipeline
//   host port                                              HTTP server

#include <cstdint>
#include <filesystem>
#include <string>

#include "salient/gbt.hpp"
#include "salient/saliency.hpp"

namespace salient::service {

enum class FeatureSelection { Default, Rfe };

struct ServiceConfig {
  std::filesystem::path data_dir = "salient-data";
  std::uint64_t seed = 7;
  TrainConfig gbt;
  SaliencyConfig saliency;
  std::size_t min_rows = 50;  // labeled rows per mode
  int cv_folds = 5;
  int target_features = 30;
  FeatureSelection selection = FeatureSelection::Default;
  std::size_t background_cap = 256;
  std::string host = "127.0.0.1";
  int port = 8080;

  // Throws ValidationError naming every bad field.
  void validate() const;
};

// Applies one "key = value" assignment; throws ValidationError for unknown
// keys and unparsable values.
void apply_setting(ServiceConfig& config, const std::string& key, const std::string& value);

// Reads a config file on top of the defaults; errors carry the line number.
ServiceConfig load_config(const std::filesystem::path& path);
ServiceConfig parse_config(const std::string& text, const std::string& origin = "config");

}  // namespace salient::service
