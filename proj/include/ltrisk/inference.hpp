#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ltrisk/estimators.hpp"

namespace ltrisk {

enum class IntervalMethod { ic, bootstrap_percentile, bootstrap_wald };

std::string_view to_string(IntervalMethod m);

struct IntervalEstimate {
  double point = 0.0;
  double standard_error = 0.0;  // on the log scale for relative risks
  double ci_low = 0.0;
  double ci_high = 0.0;
  IntervalMethod method = IntervalMethod::ic;
  double level = 0.95;
  int replicates = 0;  // bootstrap only: successful replicates
  int failed = 0;
  std::string warning;

  bool covers(double truth) const { return ci_low <= truth && truth <= ci_high; }
};

/// Two-sided standard normal quantile z_{1 - (1 - level)/2}.
double normal_critical_value(double level);

/// Wald interval from influence-curve values: SE = sqrt(var(IC) / n) with
/// the n - 1 variance. With log_scale the IC is that of log(point) and the
/// interval is exponentiated.
IntervalEstimate ic_ci(double point, std::span<const double> ic, double level = 0.95,
                       bool log_scale = false);
IntervalEstimate ic_ci(const ContrastEstimate& c, double level = 0.95);
IntervalEstimate ic_ci(const ArmEstimate& a, double level = 0.95);

struct BootstrapResult {
  IntervalEstimate percentile;
  IntervalEstimate wald;
  /// Replicate values in replicate order; NaN marks a failed replicate.
  std::vector<double> values;
  std::vector<std::string> failures;
};

/// Row indices of bootstrap replicate b: n draws with replacement, sorted.
std::vector<std::size_t> bootstrap_rows(std::uint64_t seed, int replicate, std::size_t n);

/// Generic subject bootstrap of a statistic computed on a row resample.
/// Replicates that throw are recorded and excluded; more than 10% failures
/// is a NumericalError. log_scale builds the Wald variant on log values.
BootstrapResult bootstrap_statistic(
    std::size_t n, double point, int B, double level, std::uint64_t seed,
    const std::function<double(std::span<const std::size_t> rows, int replicate)>& statistic,
    bool log_scale = false);

/// Refits the whole pipeline (g, Q, targeting) on each resample and
/// bootstraps the contrast estimate.
BootstrapResult bootstrap_ci(const ObservedDataset& data, const EstimandSpec& estimand,
                             const EstimatorConfig& config, int B, double level,
                             std::uint64_t seed);

}  // namespace ltrisk
