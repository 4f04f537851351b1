#include "salient/service/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include "salient/error.hpp"

namespace salient::service {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T number(const std::string& key, const std::string& value) {
  T v{};
  const auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || p != value.data() + value.size()) {
    throw ValidationError("config", {key + ": cannot parse '" + value + "'"});
  }
  return v;
}

}  // namespace

void ServiceConfig::validate() const {
  std::vector<std::string> v;
  try {
    gbt.validate();
  } catch (const Error& e) {
    v.emplace_back(e.what());
  }
  try {
    saliency.validate();
  } catch (const Error& e) {
    v.emplace_back(e.what());
  }
  if (cv_folds < 2) v.emplace_back("cv_folds must be >= 2");
  if (target_features < 1) v.emplace_back("target_features must be >= 1");
  if (background_cap < 1) v.emplace_back("background_cap must be >= 1");
  if (port < 0 || port > 65535) v.emplace_back("port must be in 0..65535");
  if (!v.empty()) throw ValidationError("config", std::move(v));
}

void apply_setting(ServiceConfig& c, const std::string& key, const std::string& value) {
  auto& a = c.saliency.anchor;
  if (key == "data_dir") c.data_dir = value;
  else if (key == "seed") c.seed = number<std::uint64_t>(key, value);
  else if (key == "n_trees") c.gbt.n_trees = number<int>(key, value);
  else if (key == "max_depth") c.gbt.max_depth = number<int>(key, value);
  else if (key == "learning_rate") c.gbt.learning_rate = number<double>(key, value);
  else if (key == "lambda") c.gbt.lambda = number<double>(key, value);
  else if (key == "gamma") c.gbt.gamma = number<double>(key, value);
  else if (key == "min_child_weight") c.gbt.min_child_weight = number<double>(key, value);
  else if (key == "subsample") c.gbt.subsample = number<double>(key, value);
  else if (key == "alpha_manual") c.saliency.weights.manual = number<double>(key, value);
  else if (key == "alpha_auto") c.saliency.weights.automatic = number<double>(key, value);
  else if (key == "k") c.saliency.k = number<int>(key, value);
  else if (key == "threshold") c.saliency.threshold = number<double>(key, value);
  else if (key == "policy") {
    const auto p = parse_mode_policy(value);
    if (!p) throw ValidationError("config", {"policy: expected per_feature or per_event, got '" + value + "'"});
    c.saliency.policy = *p;
  } else if (key == "tau") a.tau = number<double>(key, value);
  else if (key == "delta") a.delta = number<double>(key, value);
  else if (key == "beam_width") a.beam_width = number<int>(key, value);
  else if (key == "max_anchor_length") a.max_length = number<int>(key, value);
  else if (key == "min_rows") c.min_rows = number<std::size_t>(key, value);
  else if (key == "cv_folds") c.cv_folds = number<int>(key, value);
  else if (key == "target_features") c.target_features = number<int>(key, value);
  else if (key == "feature_selection") {
    if (value == "default") c.selection = FeatureSelection::Default;
    else if (value == "rfe") c.selection = FeatureSelection::Rfe;
    else throw ValidationError("config", {"feature_selection: expected default or rfe, got '" + value + "'"});
  } else if (key == "background_cap") c.background_cap = number<std::size_t>(key, value);
  else if (key == "host") c.host = value;
  else if (key == "port") c.port = number<int>(key, value);
  else throw ValidationError("config", {"unknown key '" + key + "'"});
}

ServiceConfig parse_config(const std::string& text, const std::string& origin) {
  ServiceConfig c;
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(origin, {"line " + std::to_string(n) + ": expected key = value"});
    }
    try {
      apply_setting(c, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    } catch (const ValidationError& e) {
      throw ValidationError(origin, {"line " + std::to_string(n) + ": " + e.violations().front()});
    }
  }
  c.validate();
  return c;
}

ServiceConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

}  // namespace salient::service
