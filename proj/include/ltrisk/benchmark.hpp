#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ltrisk/estimators.hpp"
#include "ltrisk/inference.hpp"
#include "ltrisk/simulation.hpp"

namespace ltrisk {

/// One estimator configuration of the experiment and the intervals to build
/// around its estimates.
struct EstimatorSetting {
  std::string label;
  EstimatorConfig config;
  std::vector<IntervalMethod> intervals;
  int bootstrap_replicates = 200;
};

struct BenchmarkSpec {
  std::string name;
  CoefficientMatrix coefficients;
  ScenarioKind scenario = ScenarioKind::dependent;
  std::size_t n = 2000;
  int replicates = 200;
  EstimandSpec estimand;
  std::vector<EstimatorSetting> settings;
  std::uint64_t seed = 1;
  std::size_t truth_mc = 2000000;
  double level = 0.95;
};

struct IntervalRecord {
  IntervalMethod method = IntervalMethod::ic;
  bool ok = false;
  double low = 0.0;
  double high = 0.0;
  double standard_error = 0.0;
  std::string error;
};

struct ReplicateRecord {
  int replicate = 0;
  std::size_t setting = 0;
  bool ok = false;
  double estimate = 0.0;
  double risk_treatment = 0.0;
  double risk_control = 0.0;
  std::string error;
  std::vector<IntervalRecord> intervals;
};

/// Performance of one setting; coverage and width refer to `method` (empty
/// when the setting builds no interval).
struct BenchmarkMetrics {
  std::string setting;
  std::optional<IntervalMethod> method;
  int replicates = 0;  // successful point estimates
  int failures = 0;
  double truth = 0.0;
  double mean = 0.0;
  double bias = 0.0;
  double variance = 0.0;  // R - 1 denominator
  double mse = 0.0;       // mean squared error over replicates
  double bias_se_ratio = 0.0;
  double oracle_coverage = 0.0;
  std::optional<double> coverage;
  std::optional<double> mean_width;
  int interval_failures = 0;
};

/// Point-estimate metrics. Values are summed in sorted order, so the result
/// does not depend on replicate order. MSE = bias^2 + (R-1)/R variance is
/// asserted.
BenchmarkMetrics point_metrics(std::span<const double> estimates, double truth, double level);

/// Fraction of replicates with |estimate - truth| <= z SD(estimates). With
/// zero SD it is the fraction exactly equal to the truth.
double oracle_coverage(std::span<const double> estimates, double truth, double level);

struct BenchmarkResult {
  std::string name;
  TruthResult truth_mc;
  double truth = 0.0;  // the value bias and coverage are measured against
  std::vector<ReplicateRecord> records;  // replicate-major, then setting
  std::vector<BenchmarkMetrics> metrics;
};

/// Simulates `replicates` datasets from per-replicate seeds and applies every
/// setting to each. Estimator failures are recorded and excluded. The truth
/// is the Monte-Carlo truth for the dependent scenario; for the permuted
/// null it is the null value (0 for RD, 1 for RR) while the null-block
/// incidence is still reported.
BenchmarkResult run_benchmark(const BenchmarkSpec& spec);

/// Recomputes metrics from records (used by run_benchmark).
std::vector<BenchmarkMetrics> summarize(const BenchmarkSpec& spec,
                                        std::span<const ReplicateRecord> records, double truth);

std::string replicates_csv(const BenchmarkSpec& spec, const BenchmarkResult& result);
std::string summary_csv(const BenchmarkResult& result);

std::vector<std::string> benchmark_preset_names();
/// desk, rare, null and dr experiments; see the README for their contents.
BenchmarkSpec benchmark_preset(std::string_view name);

}  // namespace ltrisk
