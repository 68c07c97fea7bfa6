#include "ltrisk/benchmark.hpp"

#include <algorithm>
#include <cmath>

#include "ltrisk/csv.hpp"
#include "ltrisk/errors.hpp"
#include "ltrisk/kernels.hpp"
#include "ltrisk/presets.hpp"
#include "ltrisk/rng.hpp"

namespace ltrisk {

namespace {

double sorted_sum(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

double truth_for(ContrastType type, const TruthResult& t) {
  switch (type) {
    case ContrastType::risk_difference: return t.rd;
    case ContrastType::relative_risk: return t.risk_treatment / t.risk_control;
    case ContrastType::per_arm_risk: return t.risk_treatment;
  }
  return t.rd;
}

}  // namespace

double oracle_coverage(std::span<const double> estimates, double truth, double level) {
  if (estimates.size() < 2) throw ConfigError("oracle coverage needs at least 2 replicates");
  const auto m = point_metrics(estimates, truth, level);
  return m.oracle_coverage;
}

BenchmarkMetrics point_metrics(std::span<const double> estimates, double truth, double level) {
  BenchmarkMetrics m;
  m.truth = truth;
  m.replicates = static_cast<int>(estimates.size());
  if (estimates.empty()) return m;
  const double R = static_cast<double>(estimates.size());
  std::vector<double> v(estimates.begin(), estimates.end());
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  // A constant estimator must give exactly zero bias and variance, which the
  // rounded sum / R does not guarantee.
  m.mean = *lo == *hi ? *lo : sorted_sum(v) / R;
  m.bias = m.mean - truth;
  std::vector<double> dev(v.size()), err(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    dev[i] = (v[i] - m.mean) * (v[i] - m.mean);
    err[i] = (v[i] - truth) * (v[i] - truth);
  }
  const double ss = sorted_sum(dev);
  m.variance = v.size() > 1 ? ss / (R - 1) : 0.0;
  m.mse = sorted_sum(err) / R;
  const double identity = m.bias * m.bias + ss / R;
  if (std::abs(m.mse - identity) > 1e-9 * std::max(1.0, m.mse))
    throw NumericalError("MSE identity violated in benchmark metrics");
  const double sd = std::sqrt(m.variance);
  m.bias_se_ratio = sd > 0 ? m.bias / sd : (m.bias == 0 ? 0.0 : std::copysign(INFINITY, m.bias));
  std::size_t hit = 0;
  if (sd > 0) {
    const double z = normal_critical_value(level);
    for (double x : v) hit += std::abs(x - truth) <= z * sd;
  } else {
    for (double x : v) hit += x == truth;
  }
  m.oracle_coverage = static_cast<double>(hit) / R;
  return m;
}

std::vector<BenchmarkMetrics> summarize(const BenchmarkSpec& spec,
                                        std::span<const ReplicateRecord> records, double truth) {
  std::vector<BenchmarkMetrics> out;
  for (std::size_t s = 0; s < spec.settings.size(); ++s) {
    const auto& setting = spec.settings[s];
    std::vector<double> est;
    int failures = 0;
    for (const auto& r : records) {
      if (r.setting != s) continue;
      if (r.ok) est.push_back(r.estimate);
      else ++failures;
    }
    auto base = point_metrics(est, truth, spec.level);
    base.setting = setting.label;
    base.failures = failures;
    if (setting.intervals.empty()) {
      out.push_back(base);
      continue;
    }
    for (std::size_t k = 0; k < setting.intervals.size(); ++k) {
      auto m = base;
      m.method = setting.intervals[k];
      std::vector<double> covered, widths;
      for (const auto& r : records) {
        if (r.setting != s || !r.ok) continue;
        const auto& iv = r.intervals[k];
        if (!iv.ok) {
          ++m.interval_failures;
          continue;
        }
        covered.push_back(iv.low <= truth && truth <= iv.high ? 1.0 : 0.0);
        widths.push_back(iv.high - iv.low);
      }
      if (!covered.empty()) {
        m.coverage = sorted_sum(covered) / static_cast<double>(covered.size());
        m.mean_width = sorted_sum(widths) / static_cast<double>(widths.size());
      }
      out.push_back(m);
    }
  }
  return out;
}

BenchmarkResult run_benchmark(const BenchmarkSpec& spec) {
  if (spec.replicates < 2) throw ConfigError("benchmark needs at least 2 replicates");
  if (spec.settings.empty()) throw ConfigError("benchmark needs at least one estimator setting");
  spec.estimand.check(spec.coefficients.layout());
  for (const auto& s : spec.settings) {
    s.config.check();
    for (auto m : s.intervals)
      if (m != IntervalMethod::ic && s.bootstrap_replicates < 2)
        throw ConfigError("setting '" + s.label + "' needs bootstrap replicates");
  }

  BenchmarkResult res;
  res.name = spec.name;
  res.truth_mc = scenario_truth(spec.coefficients, spec.scenario, spec.estimand.treatment,
                                spec.estimand.control, spec.estimand.horizon, spec.truth_mc,
                                derive_seed(spec.seed, 0x7207ULL));
  if (spec.scenario == ScenarioKind::permuted_null &&
      spec.estimand.contrast != ContrastType::per_arm_risk) {
    res.truth = spec.estimand.contrast == ContrastType::relative_risk ? 1.0 : 0.0;
  } else {
    res.truth = truth_for(spec.estimand.contrast, res.truth_mc);
  }

  const std::size_t S = spec.settings.size();
  const auto R = static_cast<std::size_t>(spec.replicates);
  res.records.resize(R * S);
  kernels::parallel_for(R, [&](std::size_t r) {
    const auto rr = static_cast<std::uint64_t>(r);
    ScenarioSpec sc;
    sc.kind = spec.scenario;
    sc.n = spec.n;
    sc.seed = derive_seed(spec.seed, 0xDA7AULL, rr);
    sc.permutation_seed = derive_seed(spec.seed, 0x9E55ULL, rr);
    const auto data = generate_scenario(spec.coefficients, sc);
    for (std::size_t s = 0; s < S; ++s) {
      const auto& setting = spec.settings[s];
      auto& rec = res.records[r * S + s];
      rec.replicate = static_cast<int>(r);
      rec.setting = s;
      auto cfg = setting.config;
      cfg.seed = derive_seed(spec.seed, 0xE5ULL, rr);
      try {
        const auto fit = run_pipeline(data, spec.estimand, cfg);
        rec.estimate = fit.contrast.estimate;
        rec.risk_treatment = fit.treatment.psi;
        rec.risk_control = fit.control.psi;
        rec.ok = true;
        std::optional<BootstrapResult> boot;
        for (auto method : setting.intervals) {
          IntervalRecord iv;
          iv.method = method;
          try {
            IntervalEstimate e;
            if (method == IntervalMethod::ic) {
              e = ic_ci(fit.contrast, spec.level);
            } else {
              if (!boot)
                boot = bootstrap_ci(data, spec.estimand, cfg, setting.bootstrap_replicates,
                                    spec.level, derive_seed(spec.seed, 0xB5ULL, rr));
              e = method == IntervalMethod::bootstrap_percentile ? boot->percentile : boot->wald;
            }
            iv.low = e.ci_low;
            iv.high = e.ci_high;
            iv.standard_error = e.standard_error;
            iv.ok = true;
          } catch (const std::exception& ex) {
            iv.error = ex.what();
          }
          rec.intervals.push_back(std::move(iv));
        }
      } catch (const std::exception& ex) {
        rec.ok = false;
        rec.error = ex.what();
      }
    }
  });
  res.metrics = summarize(spec, res.records, res.truth);
  return res;
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? csv::format_double(*v) : ""; }

std::string clean(std::string s) {
  for (auto& ch : s)
    if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
  return s;
}

}  // namespace

std::string replicates_csv(const BenchmarkSpec& spec, const BenchmarkResult& result) {
  std::string out =
      "replicate,setting,ok,estimate,risk_treatment,risk_control,ci_method,ci_ok,ci_low,ci_high,"
      "se,error\n";
  for (const auto& r : result.records) {
    const auto& label = spec.settings[r.setting].label;
    std::vector<std::string> head{std::to_string(r.replicate), label, r.ok ? "1" : "0",
                                  r.ok ? csv::format_double(r.estimate) : "",
                                  r.ok ? csv::format_double(r.risk_treatment) : "",
                                  r.ok ? csv::format_double(r.risk_control) : ""};
    if (!r.ok || r.intervals.empty()) {
      auto f = head;
      for (const char* x : {"", "", "", "", ""}) f.push_back(x);
      f.push_back(clean(r.error));
      out += csv::join(f) + "\n";
      continue;
    }
    for (const auto& iv : r.intervals) {
      auto f = head;
      f.push_back(std::string(to_string(iv.method)));
      f.push_back(iv.ok ? "1" : "0");
      f.push_back(iv.ok ? csv::format_double(iv.low) : "");
      f.push_back(iv.ok ? csv::format_double(iv.high) : "");
      f.push_back(iv.ok ? csv::format_double(iv.standard_error) : "");
      f.push_back(clean(iv.error));
      out += csv::join(f) + "\n";
    }
  }
  return out;
}

std::string summary_csv(const BenchmarkResult& result) {
  std::string out =
      "setting,ci_method,replicates,failures,truth,mean,bias,variance,mse,bias_se_ratio,"
      "coverage,oracle_coverage,mean_ci_width,ci_failures\n";
  for (const auto& m : result.metrics) {
    out += csv::join({m.setting, m.method ? std::string(to_string(*m.method)) : "none",
                      std::to_string(m.replicates), std::to_string(m.failures),
                      csv::format_double(m.truth), csv::format_double(m.mean),
                      csv::format_double(m.bias), csv::format_double(m.variance),
                      csv::format_double(m.mse), csv::format_double(m.bias_se_ratio),
                      opt(m.coverage), csv::format_double(m.oracle_coverage), opt(m.mean_width),
                      std::to_string(m.interval_failures)}) +
           "\n";
  }
  return out;
}

namespace {

LearnerSpec learner(Family f, LambdaSelection sel = LambdaSelection::cv_min) {
  LearnerSpec s;
  s.family = f;
  s.lambda_selection = sel;
  return s;
}

EstimatorSetting setting(std::string label, EstimatorKind kind, LearnerSpec q, LearnerSpec g,
                         std::vector<IntervalMethod> intervals = {}, double bound = 0.01) {
  EstimatorSetting s;
  s.label = std::move(label);
  s.config.kind = kind;
  s.config.q_learner = q;
  s.config.g_learner = g;
  s.config.truncation_bound = bound;
  s.intervals = std::move(intervals);
  return s;
}

}  // namespace

std::vector<std::string> benchmark_preset_names() { return {"desk", "rare", "null", "dr"}; }

BenchmarkSpec benchmark_preset(std::string_view name) {
  const auto glm = learner(Family::glm_adjusted);
  const auto unadj = learner(Family::glm_unadjusted);
  const auto lasso = learner(Family::lasso);
  const auto ridge_us = learner(Family::ridge, LambdaSelection::undersmoothed);
  const auto sat = learner(Family::saturated);
  const std::vector<IntervalMethod> all{IntervalMethod::ic, IntervalMethod::bootstrap_percentile,
                                        IntervalMethod::bootstrap_wald};

  BenchmarkSpec b{.name = std::string(name), .coefficients = dgp_preset("desk")};
  b.estimand = preset_estimand(b.coefficients.layout());
  if (name == "desk") {
    b.n = 2000;
    b.settings = {setting("ice/glm", EstimatorKind::ice, glm, glm),
                  setting("tmle/glm", EstimatorKind::tmle, glm, glm, {IntervalMethod::ic}),
                  setting("tmle/lasso", EstimatorKind::tmle, glm, lasso, {IntervalMethod::ic}),
                  setting("tmle/ridge-us", EstimatorKind::tmle, glm, ridge_us,
                          {IntervalMethod::ic}),
                  setting("iptw/glm", EstimatorKind::iptw_ht, glm, glm, {IntervalMethod::ic}),
                  setting("hajek/glm", EstimatorKind::iptw_hajek, glm, glm,
                          {IntervalMethod::ic})};
  } else if (name == "rare") {
    b.n = 5000;
    b.settings = {setting("tmle/ridge-us", EstimatorKind::tmle, glm, ridge_us, all)};
  } else if (name == "null") {
    // Interval estimators are evaluated on the dependent scenario only.
    b.n = 5000;
    b.scenario = ScenarioKind::permuted_null;
    b.settings = {setting("tmle/ridge-us", EstimatorKind::tmle, glm, ridge_us),
                  setting("ice/glm", EstimatorKind::ice, glm, glm)};
  } else if (name == "dr") {
    b.coefficients = dgp_preset("dr");
    b.estimand = preset_estimand(b.coefficients.layout());
    b.n = 20000;
    b.settings = {setting("tmle/g-correct/q-intercept", EstimatorKind::tmle, unadj, glm),
                  setting("tmle/g-unadjusted/q-correct", EstimatorKind::tmle, sat, unadj),
                  setting("tmle/g-unadjusted/q-intercept", EstimatorKind::tmle, unadj, unadj),
                  setting("tmle/g-correct/q-correct", EstimatorKind::tmle, sat, glm)};
  } else {
    throw ConfigError("unknown benchmark preset '" + std::string(name) +
                      "' (desk, rare, null, dr)");
  }
  return b;
}

}  // namespace ltrisk
