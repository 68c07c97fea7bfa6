#include "ltrisk/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/normal.hpp>

#include "ltrisk/errors.hpp"
#include "ltrisk/kernels.hpp"
#include "ltrisk/rng.hpp"

namespace ltrisk {

std::string_view to_string(IntervalMethod m) {
  switch (m) {
    case IntervalMethod::ic: return "ic";
    case IntervalMethod::bootstrap_percentile: return "bootstrap_percentile";
    case IntervalMethod::bootstrap_wald: return "bootstrap_wald";
  }
  return "?";
}

double normal_critical_value(double level) {
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("confidence level must be in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), 1 - (1 - level) / 2);
}

namespace {

double sample_variance(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  double mean = 0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size() - 1);
}

IntervalEstimate wald(double point, double se, double level, bool log_scale, IntervalMethod m) {
  IntervalEstimate out;
  out.point = point;
  out.standard_error = se;
  out.level = level;
  out.method = m;
  const double z = normal_critical_value(level);
  if (log_scale) {
    if (!(point > 0)) throw NumericalError("log-scale interval needs a positive estimate");
    out.ci_low = std::exp(std::log(point) - z * se);
    out.ci_high = std::exp(std::log(point) + z * se);
  } else {
    out.ci_low = point - z * se;
    out.ci_high = point + z * se;
  }
  return out;
}

}  // namespace

IntervalEstimate ic_ci(double point, std::span<const double> ic, double level, bool log_scale) {
  if (ic.empty()) throw ConfigError("no influence-curve values; use the bootstrap");
  for (double v : ic)
    if (!std::isfinite(v)) throw NumericalError("non-finite influence-curve value");
  const double var = sample_variance(ic);
  const double se = std::sqrt(var / static_cast<double>(ic.size()));
  auto out = wald(point, se, level, log_scale, IntervalMethod::ic);
  if (se == 0.0) out.warning = "zero-variance influence curve; degenerate interval";
  return out;
}

IntervalEstimate ic_ci(const ContrastEstimate& c, double level) {
  return ic_ci(c.estimate, c.ic, level, c.log_scale);
}

IntervalEstimate ic_ci(const ArmEstimate& a, double level) { return ic_ci(a.psi, a.ic, level); }

std::vector<std::size_t> bootstrap_rows(std::uint64_t seed, int replicate, std::size_t n) {
  CounterStream rng(derive_seed(seed, 0xB007ULL, static_cast<std::uint64_t>(replicate)));
  std::vector<std::size_t> rows(n);
  for (auto& r : rows) r = static_cast<std::size_t>(rng.below(n));
  std::sort(rows.begin(), rows.end());
  return rows;
}

BootstrapResult bootstrap_statistic(
    std::size_t n, double point, int B, double level, std::uint64_t seed,
    const std::function<double(std::span<const std::size_t> rows, int replicate)>& statistic,
    bool log_scale) {
  if (B < 2) throw ConfigError("bootstrap needs at least 2 replicates");
  normal_critical_value(level);
  BootstrapResult res;
  res.values.assign(static_cast<std::size_t>(B), std::numeric_limits<double>::quiet_NaN());
  std::vector<std::string> errors(static_cast<std::size_t>(B));
  kernels::parallel_for(static_cast<std::size_t>(B), [&](std::size_t b) {
    try {
      const auto rows = bootstrap_rows(seed, static_cast<int>(b), n);
      const double v = statistic(rows, static_cast<int>(b));
      if (!std::isfinite(v)) throw NumericalError("non-finite replicate value");
      res.values[b] = v;
    } catch (const std::exception& e) {
      errors[b] = e.what();
    }
  });
  std::vector<double> ok;
  for (std::size_t b = 0; b < res.values.size(); ++b) {
    if (std::isnan(res.values[b])) {
      res.failures.push_back("replicate " + std::to_string(b) + ": " + errors[b]);
      continue;
    }
    ok.push_back(res.values[b]);
  }
  const int failed = static_cast<int>(res.failures.size());
  if (failed * 10 > B)
    throw NumericalError(std::to_string(failed) + " of " + std::to_string(B) +
                         " bootstrap replicates failed (limit 10%)" +
                         (res.failures.empty() ? "" : "; first: " + res.failures.front()));
  if (ok.size() < 2) throw NumericalError("fewer than 2 successful bootstrap replicates");

  std::sort(ok.begin(), ok.end());
  const double alpha = 1 - level;
  auto order_stat = [&](double q) {
    // q * B is often meant to be an integer (0.025 * 1000) but lands just above it.
    auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(ok.size()) - 1e-9));
    k = std::clamp<std::size_t>(k, 1, ok.size());
    return ok[k - 1];
  };
  auto& pc = res.percentile;
  pc.point = point;
  pc.method = IntervalMethod::bootstrap_percentile;
  pc.level = level;
  pc.ci_low = order_stat(alpha / 2);
  pc.ci_high = order_stat(1 - alpha / 2);
  pc.replicates = static_cast<int>(ok.size());
  pc.failed = failed;

  double se;
  if (log_scale) {
    std::vector<double> logs;
    for (double v : ok) {
      if (!(v > 0)) throw NumericalError("non-positive replicate on a log-scale contrast");
      logs.push_back(std::log(v));
    }
    se = std::sqrt(sample_variance(logs));
  } else {
    se = std::sqrt(sample_variance(ok));
  }
  pc.standard_error = se;
  res.wald = wald(point, se, level, log_scale, IntervalMethod::bootstrap_wald);
  res.wald.replicates = pc.replicates;
  res.wald.failed = failed;
  if (failed > 0) {
    pc.warning = std::to_string(failed) + " failed replicates excluded";
    res.wald.warning = pc.warning;
  }
  return res;
}

BootstrapResult bootstrap_ci(const ObservedDataset& data, const EstimandSpec& estimand,
                             const EstimatorConfig& config, int B, double level,
                             std::uint64_t seed) {
  const auto full = run_pipeline(data, estimand, config);
  auto stat = [&](std::span<const std::size_t> rows, int b) {
    auto cfg = config;
    cfg.seed = derive_seed(seed, 0x5EEDULL, static_cast<std::uint64_t>(b));
    const auto boot = data.subset(rows);
    return run_pipeline(boot, estimand, cfg).contrast.estimate;
  };
  return bootstrap_statistic(data.n(), full.contrast.estimate, B, level, seed, stat,
                             estimand.contrast == ContrastType::relative_risk);
}

}  // namespace ltrisk
