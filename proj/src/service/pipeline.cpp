#include "salient/service/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "salient/error.hpp"
#include "salient/feature_domain.hpp"
#include "salient/selection.hpp"
#include "salient/shap.hpp"
#include "salient/synthetic.hpp"

namespace salient::service {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::size_t idx(FeedbackMode m) { return static_cast<std::size_t>(m); }

bool reads_habits(const FeatureSchema& schema) {
  for (std::size_t j = 0; j < schema.size(); ++j) {
    if (schema[j].base.kind == BaseKind::PriorHabit) return true;
  }
  return false;
}

const ModeArtifact& artifact(const ModelBundle& bundle, FeedbackMode mode) {
  const auto& a = bundle.modes[idx(mode)];
  if (!a) throw ModelUnavailableError("no trained " + std::string(to_token(mode)) + " model");
  return *a;
}

json matrix_to_json(const FeatureMatrix& m) {
  json values = json::array();
  json masked = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json vr = json::array();
    json mr = json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) {
      vr.push_back(m.value(i, j));
      mr.push_back(m.is_masked(i, j) ? 1 : 0);
    }
    values.push_back(std::move(vr));
    masked.push_back(std::move(mr));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"values", values}, {"masked", masked}};
}

FeatureMatrix matrix_from_json(const json& j, const std::string& fingerprint) {
  const auto rows = j.at("rows").get<std::size_t>();
  const auto cols = j.at("cols").get<std::size_t>();
  FeatureMatrix m(rows, cols, fingerprint);
  const auto& values = j.at("values");
  const auto& masked = j.at("masked");
  if (values.size() != rows || masked.size() != rows) throw Error("model file: background row count mismatch");
  for (std::size_t i = 0; i < rows; ++i) {
    if (values[i].size() != cols || masked[i].size() != cols) throw Error("model file: background width mismatch");
    for (std::size_t j2 = 0; j2 < cols; ++j2) {
      m.set(i, j2, values[i][j2].get<double>(), masked[i][j2].get<int>() != 0);
    }
  }
  return m;
}

void write_atomically(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw Error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

fs::path model_path(const fs::path& data_dir, FeedbackMode mode) {
  return data_dir / "models" / (std::string(to_token(mode)) + ".json");
}

std::map<std::string, UserProfile> profiles_for_extraction(const StoreSnapshot& s, const FeatureSchema& schema,
                                                           std::vector<TrackedEvent>& events,
                                                           std::vector<std::string>* warnings) {
  auto profiles = s.profiles;
  const bool need = reads_habits(schema);
  std::set<std::string> missing;
  for (const auto& e : s.events) {
    if (!profiles.count(e.user_id)) {
      if (need) {
        missing.insert(e.user_id);
        continue;
      }
      profiles[e.user_id] = UserProfile{e.user_id, {}};
    }
    events.push_back(e);
  }
  if (!missing.empty() && warnings) {
    warnings->push_back(std::to_string(missing.size()) + " user(s) without a profile left out, e.g. " +
                        *missing.begin());
  }
  return profiles;
}

std::string kind_token(ModelKind k) { return std::string(to_token(k)); }

}  // namespace

AnswerOutsideDomainError::AnswerOutsideDomainError(const std::string& feature, const std::string& answer,
                                                   std::vector<std::string> allowed)
    : Error("answer '" + answer + "' is outside the domain of " + feature), allowed_(std::move(allowed)) {}

std::array<ModeModel, 2> ModelBundle::views() const {
  std::array<ModeModel, 2> out;
  for (auto m : kAllModes) {
    const auto& a = artifact(*this, m);
    out[idx(m)] = {&a.model, &a.background};
  }
  return out;
}

std::array<TrainingSet, 2> training_sets(const StoreSnapshot& snapshot, const FeatureSchema& schema,
                                         std::vector<std::string>* warnings) {
  std::vector<TrackedEvent> events;
  const auto profiles = profiles_for_extraction(snapshot, schema, events, warnings);
  const auto data = extract_dataset(std::move(events), profiles, schema);
  std::map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < data.vectors.size(); ++i) row_of[data.vectors[i].event_id] = i;

  std::map<std::pair<std::string, FeedbackMode>, bool> labels;
  for (const auto& l : snapshot.labels) labels[{l.event_id, l.mode}] = l.label;
  std::map<std::string, int> elicited;
  for (const auto& r : snapshot.elicitations) elicited[r.event_id] = r.rating;
  for (const auto& [event_id, rating] : elicited) {
    labels.try_emplace({event_id, FeedbackMode::Manual}, binarize_rating(rating, event_id));
  }

  std::array<TrainingSet, 2> out;
  std::array<std::vector<FeatureVector>, 2> rows;
  for (const auto& [key, label] : labels) {
    const auto it = row_of.find(key.first);
    if (it == row_of.end()) continue;
    auto& set = out[idx(key.second)];
    rows[idx(key.second)].push_back(data.vectors[it->second]);
    set.y.push_back(label ? 1 : 0);
    set.event_ids.push_back(key.first);
  }
  for (auto m : kAllModes) {
    out[idx(m)].X = rows[idx(m)].empty() ? FeatureMatrix(0, schema.size(), schema.fingerprint())
                                         : FeatureMatrix::from_vectors(rows[idx(m)]);
  }
  return out;
}

json report_to_json(const TrainReport& report, bool include_folds) {
  json modes = json::object();
  for (const auto& m : report.modes) {
    json cv = json::object();
    for (const auto& [kind, r] : m.cv) {
      cv[kind] = {{"pooled", r.pooled}, {"fold_mean", r.fold_mean}};
      if (include_folds) cv[kind]["per_fold"] = r.per_fold;
    }
    modes[std::string(to_token(m.mode))] = {{"rows", m.rows},
                                            {"positives", m.positives},
                                            {"trained", m.trained},
                                            {"skipped", m.skipped ? json(*m.skipped) : json(nullptr)},
                                            {"cv", cv}};
  }
  return {{"format_version", kModelFileVersion},
          {"schema_fingerprint", report.schema.fingerprint()},
          {"n_features", report.schema.size()},
          {"warnings", report.warnings},
          {"modes", modes}};
}

TrainResult train_models(const StoreSnapshot& snapshot, const ServiceConfig& config, bool with_baselines) {
  config.validate();
  TrainResult result;
  auto& report = result.report;
  TrainConfig gbt = config.gbt;
  gbt.seed = config.seed;

  report.schema = default_schema();
  if (config.selection == FeatureSelection::Rfe) {
    const auto universe = feature_universe();
    const auto sets = training_sets(snapshot, universe, nullptr);
    FeatureMatrix pooled(sets[0].X.rows() + sets[1].X.rows(), universe.size(), universe.fingerprint());
    std::vector<std::uint8_t> y;
    std::size_t r = 0;
    for (const auto& s : sets) {
      for (std::size_t i = 0; i < s.X.rows(); ++i) pooled.set_row(r++, s.X.row(i));
      y.insert(y.end(), s.y.begin(), s.y.end());
    }
    const bool both = std::count(y.begin(), y.end(), 1) > 0 && std::count(y.begin(), y.end(), 0) > 0;
    if (both && pooled.rows() >= config.min_rows) {
      report.schema = select_schema_rfe(universe, pooled, y, config.target_features, gbt);
    } else {
      report.warnings.emplace_back("too few labeled rows for feature selection; using the default schema");
    }
  }

  const auto sets = training_sets(snapshot, report.schema, &report.warnings);
  auto bundle = std::make_shared<ModelBundle>();
  bundle->schema = report.schema;
  for (auto mode : kAllModes) {
    auto& mr = report.modes[idx(mode)];
    const auto& set = sets[idx(mode)];
    mr.mode = mode;
    mr.rows = set.y.size();
    mr.positives = static_cast<std::size_t>(std::count(set.y.begin(), set.y.end(), 1));
    const std::string name(to_token(mode));
    if (mr.rows < config.min_rows) {
      mr.skipped = "fewer than " + std::to_string(config.min_rows) + " labeled rows (" + std::to_string(mr.rows) + ")";
    } else if (mr.positives == 0 || mr.positives == mr.rows) {
      mr.skipped = "labels have a single class";
    } else if (mr.positives < static_cast<std::size_t>(config.cv_folds) ||
               mr.rows - mr.positives < static_cast<std::size_t>(config.cv_folds)) {
      mr.skipped = "fewer labeled rows per class than cv folds";
    }
    if (mr.skipped) {
      report.warnings.push_back(name + " model skipped: " + *mr.skipped);
      continue;
    }
    std::vector<ModelKind> kinds{ModelKind::GBT};
    if (with_baselines) kinds.insert(kinds.end(), {ModelKind::LogReg, ModelKind::DecisionTree, ModelKind::RandomForest});
    for (auto kind : kinds) {
      ModelSpec spec;
      spec.kind = kind;
      spec.gbt = gbt;
      spec.baseline.seed = config.seed;
      mr.cv[kind_token(kind)] = cross_validate(set.X, set.y, spec, config.cv_folds, config.seed,
                                               config.saliency.threshold);
    }
    bundle->modes[idx(mode)] =
        ModeArtifact{fit_gbt(set.X, set.y, gbt, mode), sample_background(set.X, config.background_cap, config.seed)};
    mr.trained = true;
  }
  if (report.any_trained()) result.bundle = std::move(bundle);
  return result;
}

json mode_artifact_to_json(const ModeArtifact& a, const FeatureSchema& schema) {
  return {{"format_version", kModelFileVersion},
          {"mode", std::string(to_token(a.model.mode()))},
          {"schema", schema},
          {"model", a.model},
          {"background", matrix_to_json(a.background)}};
}

void save_models(const TrainResult& result, const fs::path& data_dir) {
  if (!result.bundle) return;
  fs::create_directories(data_dir / "models");
  for (auto mode : kAllModes) {
    const auto path = model_path(data_dir, mode);
    if (const auto& a = result.bundle->modes[idx(mode)]) {
      write_atomically(path, mode_artifact_to_json(*a, result.bundle->schema).dump() + "\n");
    } else {
      fs::remove(path);
    }
  }
  write_atomically(data_dir / "models" / "cv_report.json", report_to_json(result.report, true).dump(2) + "\n");
}

std::shared_ptr<const ModelBundle> load_models(const fs::path& data_dir) {
  auto bundle = std::make_shared<ModelBundle>();
  bool any = false;
  for (auto mode : kAllModes) {
    const auto path = model_path(data_dir, mode);
    if (!fs::exists(path)) continue;
    std::ifstream in(path, std::ios::binary);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw Error("model file " + path.string() + " is not valid JSON");
    }
    if (j.value("format_version", -1) != kModelFileVersion) {
      throw Error("model file " + path.string() + " has an unsupported format_version");
    }
    auto schema = j.at("schema").get<FeatureSchema>();
    auto model = j.at("model").get<GBTModel>();
    if (model.schema_fingerprint() != schema.fingerprint()) {
      throw SchemaMismatchError("model file " + path.string() + " does not match its schema");
    }
    if (any && schema.fingerprint() != bundle->schema.fingerprint()) {
      throw SchemaMismatchError("manual and auto model files use different schemas");
    }
    auto background = matrix_from_json(j.at("background"), schema.fingerprint());
    bundle->schema = std::move(schema);
    bundle->modes[idx(mode)] = ModeArtifact{std::move(model), std::move(background)};
    any = true;
  }
  return any ? bundle : nullptr;
}

FeatureVector event_features(const Store& store, const FeatureSchema& schema, const std::string& event_id) {
  const auto event = store.find_event(event_id);
  if (!event) throw NotFoundError("unknown event " + event_id);
  auto profile = store.find_profile(event->user_id);
  if (!profile) {
    if (reads_habits(schema)) throw ValidationError("profile " + event->user_id, {"no profile stored"});
    profile = UserProfile{event->user_id, {}};
  }
  const auto stream = store.events_for_user(event->user_id);
  for (auto& v : extract_features(stream, *profile, schema)) {
    if (v.event_id == event_id) return std::move(v);
  }
  throw NotFoundError("unknown event " + event_id);
}

EventExplanation explain_stored_event(const Store& store, const ModelBundle& bundle, const std::string& event_id,
                                      const SaliencyConfig& config, bool all_anchors) {
  const auto views = bundle.views();
  const auto x = event_features(store, bundle.schema, event_id);
  return explain_event(x, views, bundle.schema, config, all_anchors);
}

json explanation_to_json(const EventExplanation& e, const FeatureSchema& schema) {
  json shap = json::object();
  json anchors = json::object();
  for (auto mode : kAllModes) {
    const auto& a = e.shap[idx(mode)];
    json phi = json::array();
    for (std::size_t j = 0; j < a.phi.size() && j < schema.size(); ++j) {
      phi.push_back({{"feature", schema[j].name}, {"phi", a.phi[j]}});
    }
    const std::string name(to_token(mode));
    shap[name] = {{"base_value", a.base_value}, {"attributions", phi}};
    const auto& rule = e.anchors[idx(mode)];
    anchors[name] = rule ? anchor_to_json(*rule, schema) : json(nullptr);
  }
  return {{"format_version", kModelFileVersion},
          {"report", salient::report_to_json(e.report, schema)},
          {"shap", shap},
          {"anchors", anchors}};
}

FeedbackCard event_card(const Store& store, const ModelBundle& bundle, const std::string& event_id,
                        const SaliencyConfig& config, bool expand_full) {
  const auto views = bundle.views();
  const auto x = event_features(store, bundle.schema, event_id);
  if (expand_full) return full_card(x, bundle.schema, FeedbackMode::Auto);
  return assemble_card(build_report(x, views, bundle.schema, config), x, bundle.schema);
}

WeeklyFeedback weekly_feedback(const Store& store, const ModelBundle& bundle, const std::string& user_id,
                               const std::optional<std::string>& week, const SaliencyConfig& config) {
  if (week && !is_iso_week(*week)) throw ValidationError("week", {"expected YYYY-Www, got '" + *week + "'"});
  if (!store.has_user(user_id)) throw NotFoundError("unknown user " + user_id);
  const auto views = bundle.views();
  WeeklyFeedback out;
  out.user_id = user_id;
  const auto stream = store.events_for_user(user_id);
  if (stream.empty()) {
    out.week = week.value_or("");
    return out;
  }
  out.week = week ? *week : iso_week(stream.back().timestamp);
  auto profile = store.find_profile(user_id);
  if (!profile) {
    if (reads_habits(bundle.schema)) throw ValidationError("profile " + user_id, {"no profile stored"});
    profile = UserProfile{user_id, {}};
  }
  const auto vectors = extract_features(stream, *profile, bundle.schema);
  for (std::size_t i = 0; i < stream.size(); ++i) {
    if (iso_week(stream[i].timestamp) != out.week) continue;
    const auto report = build_report(vectors[i], views, bundle.schema, config);
    out.cards.push_back(assemble_card(report, vectors[i], bundle.schema));
  }
  return out;
}

json feedback_to_json(const WeeklyFeedback& f) {
  return {{"format_version", kCardFormatVersion}, {"user_id", f.user_id}, {"week", f.week}, {"cards", f.cards}};
}

std::int64_t record_elicitation(Store& store, const FeatureSchema& schema, const ElicitationRecord& r) {
  const auto event = store.find_event(r.event_id);
  if (!event) throw NotFoundError("unknown event " + r.event_id);
  if (event->user_id != r.user_id) {
    throw ValidationError("elicitation", {"event " + r.event_id + " belongs to another user"});
  }
  const auto j = schema.index_of(r.feature);
  if (!j) throw ValidationError("elicitation", {"unknown feature '" + r.feature + "'"});
  const auto allowed = domain_labels(schema[*j]);
  if (std::find(allowed.begin(), allowed.end(), r.answer) == allowed.end()) {
    throw AnswerOutsideDomainError(r.feature, r.answer, allowed);
  }
  return store.append_elicitation(r);
}

void write_global_shap(std::ostream& out, const ModelBundle& bundle, FeedbackMode mode) {
  const auto& a = artifact(bundle, mode);
  write_global_shap_csv(out, global_shap_summary(a.model, a.background, a.background, bundle.schema));
}

json simulate(const ServiceConfig& config, const SimulateOptions& options) {
  SyntheticSpec spec;
  spec.n = options.n;
  spec.noise_rate = options.noise;
  spec.seed = options.seed;
  const auto ds = generate_synthetic_dataset(spec);

  ParsedEvents parsed;
  for (std::size_t i = 0; i < ds.events.size(); ++i) {
    parsed.records.push_back({ds.events[i], ds.ratings[i], ds.modes[i]});
    parsed.record_rows.push_back(i + 1);
  }
  ParsedProfiles profiles{ds.profiles, {}};
  Store store(config.data_dir / "salient.db");
  const auto ingest = store.ingest(parsed, &profiles);
  if (!ingest.ok()) {
    throw ConflictError("simulate: the store already holds different data (" +
                        (ingest.conflicts.empty() ? ingest.rejected.front().to_string()
                                                  : ingest.conflicts.front().to_string()) +
                        ")");
  }

  const auto trained = train_models(store.snapshot(), config);
  save_models(trained, config.data_dir);

  json f1 = json::object();
  double gbt_f1 = 0.0;
  bool dominates = true;
  for (auto kind : {ModelKind::GBT, ModelKind::LogReg, ModelKind::DecisionTree, ModelKind::RandomForest}) {
    ModelSpec ms;
    ms.kind = kind;
    ms.gbt = config.gbt;
    ms.gbt.seed = config.seed;
    ms.baseline.seed = config.seed;
    const double v = cross_validate(ds.X, ds.labels, ms, config.cv_folds, config.seed).pooled.f1;
    f1[kind_token(kind)] = v;
    if (kind == ModelKind::GBT) gbt_f1 = v;
    else dominates = dominates && gbt_f1 >= v;
  }

  const auto positives = static_cast<std::size_t>(std::count(ds.labels.begin(), ds.labels.end(), 1));
  return {{"format_version", kModelFileVersion},
          {"dataset",
           {{"seed", options.seed},
            {"n", ds.events.size()},
            {"users", ds.profiles.size()},
            {"noise", options.noise},
            {"positive_rate", static_cast<double>(positives) / static_cast<double>(ds.events.size())},
            {"manual_rows", ds.rows_for(FeedbackMode::Manual).size()},
            {"auto_rows", ds.rows_for(FeedbackMode::Auto).size()},
            {"rule", ds.rule.describe(spec.schema)}}},
          {"ingest",
           {{"events_inserted", ingest.events_inserted},
            {"events_unchanged", ingest.events_unchanged},
            {"labels_inserted", ingest.labels_inserted}}},
          {"train", report_to_json(trained.report)},
          {"learner_capability",
           {{"cv_f1", f1}, {"gbt_f1_at_least_0_85", gbt_f1 >= 0.85}, {"gbt_at_least_baselines", dominates}}}};
}

}  // namespace salient::service
