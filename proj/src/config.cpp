#include "ltrisk/config.hpp"

#include <cmath>
#include <cstdio>

#include "ltrisk/errors.hpp"

namespace ltrisk {

namespace {

using nlohmann::json;

void only_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

template <class T>
T get(const json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": key '" + key + "' is missing or has the wrong type");
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  return j.contains(key) ? get<T>(j, key, where) : fallback;
}

}  // namespace

IntervalMethod interval_method_from_string(std::string_view s) {
  for (auto m : {IntervalMethod::ic, IntervalMethod::bootstrap_percentile,
                 IntervalMethod::bootstrap_wald})
    if (to_string(m) == s) return m;
  if (s == "bootstrap") return IntervalMethod::bootstrap_percentile;
  throw ConfigError("unknown interval method '" + std::string(s) + "'");
}

LearnerSpec learner_from_json(const json& j) {
  LearnerSpec s;
  if (j.is_string()) {
    s.family = family_from_string(j.get<std::string>());
    s.check();
    return s;
  }
  const std::string where = "learner";
  only_keys(j, {"family", "lambda_selection", "alpha", "folds", "path_size", "path_ratio", "trees",
                "min_leaf", "mtry"},
            where);
  s.family = family_from_string(get<std::string>(j, "family", where));
  if (j.contains("lambda_selection"))
    s.lambda_selection = lambda_selection_from_string(get<std::string>(j, "lambda_selection", where));
  s.alpha = get_or(j, "alpha", s.alpha, where);
  s.folds = get_or(j, "folds", s.folds, where);
  s.path_size = get_or(j, "path_size", s.path_size, where);
  s.path_ratio = get_or(j, "path_ratio", s.path_ratio, where);
  s.trees = get_or(j, "trees", s.trees, where);
  s.min_leaf = get_or(j, "min_leaf", s.min_leaf, where);
  s.mtry = get_or(j, "mtry", s.mtry, where);
  s.check();
  return s;
}

nlohmann::ordered_json learner_to_json(const LearnerSpec& s) {
  nlohmann::ordered_json j;
  j["family"] = to_string(s.family);
  if (s.penalized()) {
    j["lambda_selection"] = to_string(s.lambda_selection);
    if (s.family == Family::elastic_net) j["alpha"] = s.alpha;
    j["folds"] = s.folds;
    j["path_size"] = s.path_size;
    j["path_ratio"] = s.path_ratio;
  }
  if (s.family == Family::random_forest) {
    j["trees"] = s.trees;
    j["min_leaf"] = s.min_leaf;
    j["mtry"] = s.mtry;
  }
  return j;
}

EstimatorConfig estimator_config_from_json(const json& j) {
  const std::string where = "estimator";
  only_keys(j, {"kind", "q_learner", "g_learner", "truncation_bound"}, where);
  EstimatorConfig c;
  c.kind = estimator_from_string(get<std::string>(j, "kind", where));
  if (j.contains("q_learner")) c.q_learner = learner_from_json(j.at("q_learner"));
  if (j.contains("g_learner")) c.g_learner = learner_from_json(j.at("g_learner"));
  c.truncation_bound = get_or(j, "truncation_bound", c.truncation_bound, where);
  c.check();
  return c;
}

nlohmann::ordered_json estimator_config_to_json(const EstimatorConfig& c) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(c.kind);
  j["q_learner"] = learner_to_json(c.q_learner);
  if (needs_g(c.kind)) {
    j["g_learner"] = learner_to_json(c.g_learner);
    j["truncation_bound"] = c.truncation_bound;
  }
  return j;
}

Regime regime_from_json(const json& j, const SchemaLayout& layout) {
  const std::string where = "regime";
  only_keys(j, {"name", "sustained", "assignments"}, where);
  const auto name = get<std::string>(j, "name", where);
  Regime r;
  if (j.contains("sustained") == j.contains("assignments"))
    throw ConfigError("regime '" + name + "': give exactly one of sustained or assignments");
  if (j.contains("sustained")) {
    const auto v = get<std::vector<int>>(j, "sustained", where);
    if (v.size() != layout.exposure_count())
      throw ConfigError("regime '" + name + "': sustained needs one value per exposure");
    r = Regime::sustained(layout, name, v);
  } else {
    r.name = name;
    r.assignments = get<std::vector<std::vector<int>>>(j, "assignments", where);
  }
  r.check(layout);
  return r;
}

nlohmann::ordered_json regime_to_json(const Regime& r) {
  nlohmann::ordered_json j;
  j["name"] = r.name;
  j["assignments"] = r.assignments;
  return j;
}

EstimandSpec estimand_from_json(const json& j, const SchemaLayout& layout) {
  const std::string where = "estimand";
  only_keys(j, {"treatment", "control", "horizon", "contrast"}, where);
  EstimandSpec e;
  const std::vector<int> ones(layout.exposure_count(), 1), zeros(layout.exposure_count(), 0);
  e.treatment = j.contains("treatment") ? regime_from_json(j.at("treatment"), layout)
                                        : Regime::sustained(layout, "sustained_use", ones);
  e.control = j.contains("control") ? regime_from_json(j.at("control"), layout)
                                    : Regime::sustained(layout, "no_use", zeros);
  e.horizon = get_or(j, "horizon", layout.intervals(), where);
  if (j.contains("contrast")) e.contrast = contrast_from_string(get<std::string>(j, "contrast", where));
  e.check(layout);
  return e;
}

nlohmann::ordered_json estimand_to_json(const EstimandSpec& e) {
  nlohmann::ordered_json j;
  j["treatment"] = regime_to_json(e.treatment);
  j["control"] = regime_to_json(e.control);
  j["horizon"] = e.horizon;
  j["contrast"] = to_string(e.contrast);
  return j;
}

bool InferenceConfig::needs_bootstrap() const {
  for (auto m : methods)
    if (m != IntervalMethod::ic) return true;
  return false;
}

InferenceConfig inference_config_from_json(const json& j) {
  const std::string where = "inference";
  only_keys(j, {"methods", "bootstrap_replicates", "level"}, where);
  InferenceConfig c;
  if (j.contains("methods")) {
    c.methods.clear();
    for (const auto& m : get<std::vector<std::string>>(j, "methods", where))
      c.methods.push_back(interval_method_from_string(m));
  }
  c.bootstrap_replicates = get_or(j, "bootstrap_replicates", c.bootstrap_replicates, where);
  c.level = get_or(j, "level", c.level, where);
  if (!(c.level > 0 && c.level < 1)) throw ConfigError("inference: level must lie in (0, 1)");
  if (c.needs_bootstrap() && c.bootstrap_replicates < 2)
    throw ConfigError("inference: bootstrap_replicates must be >= 2");
  return c;
}

bool FitConfig::stochastic() const {
  auto random = [](const LearnerSpec& s) {
    return s.family == Family::random_forest ||
           (s.penalized() && s.lambda_selection == LambdaSelection::cv_min);
  };
  return inference.needs_bootstrap() || random(estimator.q_learner) ||
         (needs_g(estimator.kind) && random(estimator.g_learner));
}

FitConfig fit_config_from_json(const json& j, const SchemaLayout& layout) {
  only_keys(j, {"estimand", "estimator", "inference", "risk_curve"}, "fit config");
  if (!j.contains("estimator")) throw ConfigError("fit config: missing key 'estimator'");
  FitConfig c;
  c.estimand = estimand_from_json(j.value("estimand", json::object()), layout);
  c.estimator = estimator_config_from_json(j.at("estimator"));
  if (j.contains("inference")) c.inference = inference_config_from_json(j.at("inference"));
  c.risk_curve = get_or(j, "risk_curve", false, "fit config");
  return c;
}

std::string format_rd_percent(double rd) {
  if (!std::isfinite(rd)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", rd * 100.0);
  std::string s(buf);
  if (s == "-0.00") s = "0.00";
  return s;
}

}  // namespace ltrisk
