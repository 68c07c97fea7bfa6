#include "ltrisk/presets.hpp"

#include "ltrisk/errors.hpp"

namespace ltrisk {

namespace {

std::shared_ptr<const SchemaLayout> preset_layout() {
  NodeSchema s;
  s.baseline_nodes = {"male", "age65"};
  s.covariate_nodes = {"cvd", "renal"};
  s.exposure_nodes = {"glp1"};
  s.outcome_node = "dementia";
  s.competing_node = "death";
  s.censor_node = "censored";
  s.intervals = 3;
  return std::make_shared<const SchemaLayout>(std::move(s));
}

std::string at(const char* node, int t) { return std::string(node) + "_t" + std::to_string(t); }

struct Strengths {
  double outcome_intercept;
  double death_intercept;
  double censor_intercept;
  double cov_on_outcome;   // each comorbidity on dementia
  double cov_on_exposure;  // each comorbidity on continued use
  double exposure_on_cov;  // past use on new comorbidity
  double exposure_on_outcome;
  double exposure_persistence;
  double cov_persistence;  // comorbidities are close to absorbing
};

CoefficientMatrix build(const Strengths& s) {
  CoefficientMatrix m(preset_layout());
  m.set("male", "intercept", -0.1);
  m.set("age65", "intercept", -0.3).set("age65", "male", -0.2);
  for (int t = 1; t <= 3; ++t) {
    const auto cvd = at("cvd", t), renal = at("renal", t);
    const auto y = at("dementia", t), d = at("death", t);
    if (t == 1) {
      m.set(cvd, "intercept", -1.4).set(cvd, "age65", 0.8).set(cvd, "male", 0.4);
      m.set(renal, "intercept", -1.8).set(renal, "age65", 0.6).set(renal, cvd, 0.7);
    } else {
      const auto a = at("glp1", t - 1);
      m.set(cvd, "intercept", -2.6).set(cvd, at("cvd", t - 1), s.cov_persistence).set(cvd, "age65", 0.5);
      m.set(cvd, a, s.exposure_on_cov);
      m.set(renal, "intercept", -2.8).set(renal, at("renal", t - 1), s.cov_persistence).set(renal, cvd, 0.6);
      m.set(renal, a, s.exposure_on_cov);
    }
    m.set(y, "intercept", s.outcome_intercept).set(y, "age65", 1.0);
    m.set(y, cvd, s.cov_on_outcome).set(y, renal, s.cov_on_outcome);
    if (t > 1) m.set(y, at("glp1", t - 1), s.exposure_on_outcome);
    m.set(d, "intercept", s.death_intercept).set(d, "age65", 1.2).set(d, cvd, 0.5);
    if (t == 3) break;
    const auto a = at("glp1", t), c = at("censored", t);
    m.set(a, "intercept", -0.6).set(a, "age65", -0.5).set(a, "male", 0.2);
    m.set(a, cvd, s.cov_on_exposure).set(a, renal, s.cov_on_exposure);
    if (t > 1) m.set(a, at("glp1", t - 1), s.exposure_persistence);
    m.set(c, "intercept", s.censor_intercept).set(c, "age65", -0.3).set(c, a, -0.2);
  }
  return m;
}

}  // namespace

std::vector<std::string> dgp_preset_names() { return {"desk", "dr"}; }

CoefficientMatrix dgp_preset(std::string_view name) {
  if (name == "desk") {
    // Rare outcome, moderate confounding.
    return build({.outcome_intercept = -5.75,
                  .death_intercept = -4.4,
                  .censor_intercept = -2.6,
                  .cov_on_outcome = 0.6,
                  .cov_on_exposure = 0.5,
                  .exposure_on_cov = -0.4,
                  .exposure_on_outcome = -0.4,
                  .exposure_persistence = 2.5,
                  .cov_persistence = 4.5});
  }
  if (name == "dr") {
    // Common outcome, strong confounding by the comorbidities.
    return build({.outcome_intercept = -3.2,
                  .death_intercept = -3.6,
                  .censor_intercept = -2.6,
                  .cov_on_outcome = 1.3,
                  .cov_on_exposure = 0.8,
                  .exposure_on_cov = -0.6,
                  .exposure_on_outcome = -0.5,
                  .exposure_persistence = 2.0,
                  .cov_persistence = 9.0});
  }
  throw ConfigError("unknown DGP preset '" + std::string(name) + "' (desk, dr)");
}

EstimandSpec preset_estimand(const SchemaLayout& layout) {
  EstimandSpec e;
  e.treatment = Regime::sustained(layout, "sustained_use", {1});
  e.control = Regime::sustained(layout, "no_use", {0});
  e.horizon = layout.intervals();
  e.contrast = ContrastType::risk_difference;
  return e;
}

}  // namespace ltrisk
