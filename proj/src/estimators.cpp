#include "ltrisk/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ltrisk/errors.hpp"
#include "ltrisk/rng.hpp"

namespace ltrisk {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::size_t> q_predictors(const SchemaLayout& lay, int t) {
  std::vector<std::size_t> cols;
  for (std::size_t j = 0; j < lay.schema().baseline_nodes.size(); ++j) cols.push_back(lay.baseline(j));
  for (int s = 1; s <= t; ++s)
    for (std::size_t j = 0; j < lay.covariate_count(); ++j) cols.push_back(lay.covariate(j, s));
  std::sort(cols.begin(), cols.end());
  return cols;
}

void check_horizon(const SchemaLayout& lay, int horizon) {
  if (horizon < 1 || horizon > lay.intervals())
    throw ConfigError("horizon must be in 1.." + std::to_string(lay.intervals()));
}

struct Fluctuation {
  double epsilon = 0.0;
  double residual = 0.0;
  bool flagged = false;
};

// Solves sum_i w_i (y_i - expit(o_i + eps)) = 0 for eps. The score is
// decreasing in eps, so Newton steps are kept inside a shrinking bracket.
Fluctuation solve_fluctuation(std::span<const double> y, std::span<const double> offset,
                              std::span<const double> w) {
  double sw = 0;
  for (double v : w) sw += v;
  auto score = [&](double eps, double* info) {
    double s = 0, h = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double p = expit(offset[i] + eps);
      s += w[i] * (y[i] - p);
      h += w[i] * p * (1 - p);
    }
    if (info) *info = h;
    return s;
  };
  Fluctuation out;
  if (sw <= 0) return out;
  double lo = -kMaxEpsilon, hi = kMaxEpsilon;
  const double s_lo = score(lo, nullptr), s_hi = score(hi, nullptr);
  if (s_lo <= 0) {
    out.epsilon = lo;
    out.flagged = true;
    out.residual = std::abs(s_lo) / sw;
    return out;
  }
  if (s_hi >= 0) {
    out.epsilon = hi;
    out.flagged = true;
    out.residual = std::abs(s_hi) / sw;
    return out;
  }
  double eps = 0.0, info = 0.0;
  double s = score(eps, &info);
  for (int it = 0; it < 200; ++it) {
    if (std::abs(s) <= 1e-13 * sw) break;
    if (s > 0) lo = eps; else hi = eps;
    double next = info > 0 ? eps + s / info : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - eps) <= 1e-15 * std::max(1.0, std::abs(eps))) break;
    eps = next;
    s = score(eps, &info);
  }
  out.epsilon = eps;
  out.residual = std::abs(s) / sw;
  return out;
}

struct ArmInputs {
  const ObservedDataset& data;
  std::span<const SubjectStatus> status;
  const AdherenceTable& adherence;
  const Regime& regime;
  int horizon;
};

// Backward recursion shared by ICE and TMLE. With cumg set, each Q_t is
// fluctuated before it feeds the next regression.
ArmEstimate run_recursion(const ArmInputs& in, const LearnerSpec& q_spec, std::uint64_t seed,
                          const CumulativeG* cumg) {
  const auto& lay = in.data.layout();
  const std::size_t n = in.data.n();
  const int H = in.horizon;
  ArmEstimate est;
  est.regime = in.regime.name;
  est.kind = cumg ? EstimatorKind::tmle : EstimatorKind::ice;
  est.horizon = H;

  IceStack stack;
  stack.horizon = H;
  stack.q.assign(static_cast<std::size_t>(H) + 1, {});
  stack.fixed.assign(static_cast<std::size_t>(H) + 1, {});
  stack.fits.resize(static_cast<std::size_t>(H) + 1);

  auto& qh = stack.q[static_cast<std::size_t>(H)];
  auto& fh = stack.fixed[static_cast<std::size_t>(H)];
  qh.assign(n, 0.0);
  fh.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    qh[i] = in.status[i].outcome_by(H) ? 1.0 : 0.0;
    fh[i] = in.status[i].event_by(H) ? 1 : 0;
  }
  if (cumg) {
    est.epsilons.assign(static_cast<std::size_t>(H - 1), 0.0);
    est.score_residuals.assign(static_cast<std::size_t>(H - 1), 0.0);
  }

  for (int t = H - 1; t >= 1; --t) {
    const auto& next = stack.q[static_cast<std::size_t>(t) + 1];
    auto& q = stack.q[static_cast<std::size_t>(t)];
    auto& fixed = stack.fixed[static_cast<std::size_t>(t)];
    q.assign(n, kNaN);
    fixed.assign(n, 0);
    std::vector<std::size_t> fit_rows, eval_rows;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& st = in.status[i];
      if (st.event_by(t)) {
        q[i] = st.outcome_by(t) ? 1.0 : 0.0;
        fixed[i] = 1;
        continue;
      }
      if (!st.at_risk(t)) continue;
      if (in.adherence(i, t - 1)) eval_rows.push_back(i);
      if (in.adherence(i, t)) fit_rows.push_back(i);
    }
    if (eval_rows.empty()) continue;
    if (fit_rows.empty())
      throw NumericalError("empty adherent stratum at t=" + std::to_string(t));

    const auto cols = q_predictors(lay, t);
    const auto x_fit = build_design(in.data, cols, fit_rows);
    std::vector<double> y(fit_rows.size()), w(fit_rows.size(), 1.0);
    std::vector<std::uint64_t> keys(fit_rows.size());
    for (std::size_t r = 0; r < fit_rows.size(); ++r) {
      y[r] = next[fit_rows[r]];
      if (!std::isfinite(y[r])) throw NumericalError("undefined Q value at t=" + std::to_string(t + 1));
      keys[r] = fit_rows[r];
    }
    FitOptions opt{derive_seed(seed, 0x51ULL, static_cast<std::uint64_t>(t),
                               static_cast<std::uint64_t>(H)),
                   keys};
    auto learner = fit_learner(q_spec, x_fit, y, w, opt);
    if (!learner.diagnostics().note.empty())
      est.warnings.push_back("Q_" + std::to_string(t) + ": " + learner.diagnostics().note);
    const auto x_eval = build_design(in.data, cols, eval_rows);
    auto pred = learner.predict(x_eval);

    if (cumg) {
      // Offsets for every evaluated subject; the fluctuation is fit on the
      // adherent subset with weights 1 / g(i, t).
      std::vector<double> offset(eval_rows.size());
      for (std::size_t r = 0; r < eval_rows.size(); ++r)
        offset[r] = logit(std::clamp(pred[r], kQClamp, 1.0 - kQClamp));
      std::vector<double> fy, fo, fw;
      // A Q of exactly 0 or 1 has an infinite offset and no finite epsilon
      // moves it, so it stays out of the fluctuation fit.
      auto fixed_q = [&](std::size_t r) { return pred[r] == 0.0 || pred[r] == 1.0; };
      for (std::size_t r = 0; r < eval_rows.size(); ++r) {
        const auto i = eval_rows[r];
        if (!in.adherence(i, t) || fixed_q(r)) continue;
        fy.push_back(next[i]);
        fo.push_back(offset[r]);
        fw.push_back(1.0 / cumg->value(i, t));
      }
      const auto fl = solve_fluctuation(fy, fo, fw);
      est.epsilons[static_cast<std::size_t>(t - 1)] = fl.epsilon;
      if (fl.flagged) {
        est.fluctuation_flag = true;
        est.warnings.push_back("fluctuation at t=" + std::to_string(t) + " hit |epsilon| = 50");
      }
      for (std::size_t r = 0; r < eval_rows.size(); ++r)
        if (!fixed_q(r)) pred[r] = expit(offset[r] + fl.epsilon);
      double sw = 0, sr = 0;
      for (std::size_t r = 0; r < eval_rows.size(); ++r) {
        const auto i = eval_rows[r];
        if (!in.adherence(i, t)) continue;
        const double wi = 1.0 / cumg->value(i, t);
        sw += wi;
        sr += wi * (next[i] - pred[r]);
      }
      est.score_residuals[static_cast<std::size_t>(t - 1)] = sw > 0 ? std::abs(sr) / sw : 0.0;
    }
    for (std::size_t r = 0; r < eval_rows.size(); ++r) q[eval_rows[r]] = pred[r];
    stack.fits[static_cast<std::size_t>(t)] = std::move(learner);
  }

  const auto& q1 = stack.q[1];
  double sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(q1[i])) throw NumericalError("undefined Q_1 value");
    sum += q1[i];
  }
  est.psi = n ? sum / static_cast<double>(n) : 0.0;

  if (cumg) {
    est.ic.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double d = q1[i] - est.psi;
      for (int t = 1; t < H; ++t) {
        if (!in.adherence(i, t) || !in.status[i].at_risk(t)) continue;
        const auto ts = static_cast<std::size_t>(t);
        d += (stack.q[ts + 1][i] - stack.q[ts][i]) / cumg->value(i, t);
      }
      est.ic[i] = d;
    }
    std::size_t trunc = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (int t = 1; t < H; ++t)
        if (in.adherence(i, t) && cumg->truncated(i, t)) {
          ++trunc;
          break;
        }
    est.truncated = trunc;
  }
  est.stack = std::move(stack);
  return est;
}

ArmEstimate run_iptw(const ArmInputs& in, const CumulativeG& cumg, EstimatorKind variant) {
  if (variant != EstimatorKind::iptw_ht && variant != EstimatorKind::iptw_hajek)
    throw ConfigError("iptw variant must be iptw_ht or iptw_hajek");
  const std::size_t n = in.data.n();
  const int H = in.horizon;
  const int stop = H - 1;
  if (stop > cumg.intervals()) throw ConfigError("cumulative g does not reach the horizon");
  ArmEstimate est;
  est.regime = in.regime.name;
  est.kind = variant;
  est.horizon = H;
  std::vector<double> wt(n, 0.0), y(n, 0.0);
  double sw = 0, swy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = in.status[i].outcome_by(H) ? 1.0 : 0.0;
    if (!in.adherence(i, stop)) continue;
    wt[i] = stop >= 1 ? 1.0 / cumg.value(i, stop) : 1.0;
    if (stop >= 1 && cumg.truncated(i, stop)) ++est.truncated;
    sw += wt[i];
    swy += wt[i] * y[i];
  }
  const double nn = static_cast<double>(n);
  est.ic.assign(n, 0.0);
  if (variant == EstimatorKind::iptw_ht) {
    est.psi = n ? swy / nn : 0.0;
    for (std::size_t i = 0; i < n; ++i) est.ic[i] = wt[i] * y[i] - est.psi;
  } else {
    if (sw <= 0) throw NumericalError("no adherent subjects for the Hajek estimator");
    est.psi = swy / sw;
    const double mean_w = sw / nn;
    for (std::size_t i = 0; i < n; ++i) est.ic[i] = wt[i] / mean_w * (y[i] - est.psi);
  }
  return est;
}

}  // namespace

std::string_view to_string(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::ice: return "ice";
    case EstimatorKind::tmle: return "tmle";
    case EstimatorKind::iptw_ht: return "iptw_ht";
    case EstimatorKind::iptw_hajek: return "iptw_hajek";
  }
  return "?";
}

EstimatorKind estimator_from_string(std::string_view s) {
  if (s == "ice" || s == "gcomp") return EstimatorKind::ice;
  if (s == "tmle") return EstimatorKind::tmle;
  if (s == "iptw_ht" || s == "iptw") return EstimatorKind::iptw_ht;
  if (s == "iptw_hajek" || s == "hajek") return EstimatorKind::iptw_hajek;
  throw ConfigError("unknown estimator '" + std::string(s) + "'");
}

void EstimatorConfig::check() const {
  q_learner.check();
  g_learner.check();
  if (!(truncation_bound > 0.0 && truncation_bound <= 0.5))
    throw ConfigError("truncation_bound must be in (0, 0.5]");
}

ArmEstimate ice_gcomp(const ObservedDataset& data, const Regime& regime, int horizon,
                      const LearnerSpec& q_spec, std::uint64_t seed) {
  check_horizon(data.layout(), horizon);
  regime.check(data.layout());
  const auto status = summarize_subjects(data);
  const AdherenceTable adh(data, status, regime);
  return run_recursion({data, status, adh, regime, horizon}, q_spec, seed, nullptr);
}

ArmEstimate tmle(const ObservedDataset& data, const Regime& regime, int horizon,
                 const LearnerSpec& q_spec, const CumulativeG& cumg, std::uint64_t seed) {
  check_horizon(data.layout(), horizon);
  regime.check(data.layout());
  if (cumg.n() != data.n() || cumg.intervals() < horizon - 1)
    throw ConfigError("cumulative g does not match the data and horizon");
  const auto status = summarize_subjects(data);
  const AdherenceTable adh(data, status, regime);
  return run_recursion({data, status, adh, regime, horizon}, q_spec, seed, &cumg);
}

ArmEstimate tmle(const ObservedDataset& data, const Regime& regime, int horizon,
                 const LearnerSpec& q_spec, const LearnerSpec& g_spec, double truncation_bound,
                 std::uint64_t seed) {
  check_horizon(data.layout(), horizon);
  const auto status = summarize_subjects(data);
  const auto g = fit_g(data, status, g_spec, derive_seed(seed, 0x6ULL), horizon - 1);
  const auto cumg = cumulative_g(g, data, status, regime, truncation_bound);
  return tmle(data, regime, horizon, q_spec, cumg, seed);
}

ArmEstimate iptw(const ObservedDataset& data, const Regime& regime, int horizon,
                 const CumulativeG& cumg, EstimatorKind variant) {
  check_horizon(data.layout(), horizon);
  regime.check(data.layout());
  const auto status = summarize_subjects(data);
  const AdherenceTable adh(data, status, regime);
  return run_iptw({data, status, adh, regime, horizon}, cumg, variant);
}

ArmEstimate iptw(const ObservedDataset& data, const Regime& regime, int horizon,
                 const LearnerSpec& g_spec, double truncation_bound, EstimatorKind variant,
                 std::uint64_t seed) {
  check_horizon(data.layout(), horizon);
  const auto status = summarize_subjects(data);
  const auto g = fit_g(data, status, g_spec, derive_seed(seed, 0x6ULL), horizon - 1);
  const auto cumg = cumulative_g(g, data, status, regime, truncation_bound);
  return iptw(data, regime, horizon, cumg, variant);
}

ArmEstimate estimate_arm(const ObservedDataset& data, const Regime& regime, int horizon,
                         const EstimatorConfig& config, const GFit* gfit) {
  config.check();
  check_horizon(data.layout(), horizon);
  regime.check(data.layout());
  const auto status = summarize_subjects(data);
  const AdherenceTable adh(data, status, regime);
  const ArmInputs in{data, status, adh, regime, horizon};
  ArmEstimate est;
  if (config.kind == EstimatorKind::ice) {
    est = run_recursion(in, config.q_learner, config.seed, nullptr);
  } else {
    std::optional<GFit> own;
    if (!gfit || gfit->max_interval < horizon - 1) {
      own = fit_g(data, status, config.g_learner, derive_seed(config.seed, 0x6ULL), horizon - 1);
      gfit = &*own;
    }
    const auto cumg = cumulative_g(*gfit, data, status, regime, config.truncation_bound);
    est = config.kind == EstimatorKind::tmle
              ? run_recursion(in, config.q_learner, config.seed, &cumg)
              : run_iptw(in, cumg, config.kind);
    for (const auto& node : gfit->nodes)
      if (!node.warning.empty() && node.interval < horizon)
        est.warnings.push_back("g " + data.layout().nodes()[node.column].column_name() + ": " +
                               node.warning);
  }
  if (!config.keep_stack) est.stack.reset();
  return est;
}

ContrastEstimate contrast(const ArmEstimate& treatment, const ArmEstimate& control,
                          ContrastType type) {
  if (treatment.horizon != control.horizon) throw ConfigError("contrast arms differ in horizon");
  if (treatment.ic.size() != control.ic.size())
    throw ConfigError("contrast arms differ in influence-curve length");
  ContrastEstimate c;
  c.type = type;
  const std::size_t n = treatment.ic.size();
  switch (type) {
    case ContrastType::risk_difference:
      c.estimate = treatment.psi - control.psi;
      c.ic.resize(n);
      for (std::size_t i = 0; i < n; ++i) c.ic[i] = treatment.ic[i] - control.ic[i];
      break;
    case ContrastType::relative_risk:
      if (control.psi <= 0.0) throw NumericalError("relative risk undefined");
      if (treatment.psi <= 0.0) throw NumericalError("relative risk undefined (zero treated risk)");
      c.estimate = treatment.psi / control.psi;
      c.log_scale = true;
      c.ic.resize(n);
      for (std::size_t i = 0; i < n; ++i)
        c.ic[i] = treatment.ic[i] / treatment.psi - control.ic[i] / control.psi;
      break;
    case ContrastType::per_arm_risk:
      c.estimate = treatment.psi;
      c.ic = treatment.ic;
      break;
  }
  return c;
}

PipelineResult run_pipeline(const ObservedDataset& data, const EstimandSpec& estimand,
                            const EstimatorConfig& config) {
  config.check();
  estimand.check(data.layout());
  std::optional<GFit> g;
  PipelineResult out;
  if (needs_g(config.kind)) {
    const auto status = summarize_subjects(data);
    g = fit_g(data, status, config.g_learner, derive_seed(config.seed, 0x6ULL),
              data.layout().treatment_intervals());
    for (const auto* r : {&estimand.treatment, &estimand.control}) {
      const auto cumg = cumulative_g(*g, data, status, *r, config.truncation_bound);
      const AdherenceTable adh(data, status, *r);
      auto rows = positivity_diagnostics(cumg, adh, r->name);
      out.positivity.insert(out.positivity.end(), rows.begin(), rows.end());
    }
  }
  const GFit* gp = g ? &*g : nullptr;
  out.treatment = estimate_arm(data, estimand.treatment, estimand.horizon, config, gp);
  out.control = estimate_arm(data, estimand.control, estimand.horizon, config, gp);
  // ICE carries no influence curve, so its contrast IC is empty too.
  out.contrast = contrast(out.treatment, out.control, estimand.contrast);
  return out;
}

std::vector<HorizonEstimate> risk_curve(const ObservedDataset& data, const Regime& regime,
                                        const EstimatorConfig& config) {
  config.check();
  std::optional<GFit> g;
  std::string g_error;
  if (needs_g(config.kind)) {
    try {
      const auto status = summarize_subjects(data);
      g = fit_g(data, status, config.g_learner, derive_seed(config.seed, 0x6ULL),
                data.layout().treatment_intervals());
    } catch (const std::exception& e) {
      g_error = e.what();
    }
  }
  std::vector<HorizonEstimate> curve;
  for (int h = 1; h <= data.layout().intervals(); ++h) {
    HorizonEstimate he;
    he.horizon = h;
    try {
      if (!g_error.empty()) throw NumericalError(g_error);
      he.estimate = estimate_arm(data, regime, h, config, g ? &*g : nullptr);
    } catch (const std::exception& e) {
      he.error = e.what();
    }
    curve.push_back(std::move(he));
  }
  return curve;
}

std::vector<int> monotonicity_violations(const std::vector<HorizonEstimate>& curve) {
  std::vector<int> out;
  double prev = -1.0;
  for (const auto& h : curve) {
    if (!h.estimate) continue;
    if (h.estimate->psi < prev) out.push_back(h.horizon);
    prev = h.estimate->psi;
  }
  return out;
}

}  // namespace ltrisk
