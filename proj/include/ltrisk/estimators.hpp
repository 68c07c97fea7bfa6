#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ltrisk/data_model.hpp"
#include "ltrisk/gmechanism.hpp"
#include "ltrisk/learners.hpp"

namespace ltrisk {

enum class EstimatorKind { ice, tmle, iptw_ht, iptw_hajek };

std::string_view to_string(EstimatorKind k);
EstimatorKind estimator_from_string(std::string_view s);
inline bool needs_g(EstimatorKind k) { return k != EstimatorKind::ice; }

/// Iterated regressions for one arm. q[t][i] for t = 1..horizon (index 0
/// unused); NaN where subject i needs no value at t. fixed[t][i] marks values
/// set by the post-event rule (1 after the outcome, 0 after death).
struct IceStack {
  int horizon = 0;
  std::vector<std::vector<double>> q;
  std::vector<std::vector<std::uint8_t>> fixed;
  std::vector<std::optional<FittedLearner>> fits;  // fits[t], t = 1..horizon-1
};

struct ArmEstimate {
  std::string regime;
  EstimatorKind kind = EstimatorKind::tmle;
  int horizon = 1;
  double psi = 0.0;
  /// Per-subject influence-curve values; empty for ICE.
  std::vector<double> ic;
  std::vector<double> epsilons;         // TMLE, indexed t - 1
  std::vector<double> score_residuals;  // TMLE, indexed t - 1
  std::size_t truncated = 0;
  bool fluctuation_flag = false;
  std::vector<std::string> warnings;
  std::optional<IceStack> stack;
};

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::tmle;
  LearnerSpec q_learner;
  LearnerSpec g_learner;
  double truncation_bound = 0.01;
  std::uint64_t seed = 0;
  bool keep_stack = false;

  void check() const;
};

/// Fluctuation parameters beyond this magnitude are flagged.
inline constexpr double kMaxEpsilon = 50.0;
/// Q values are clamped to [kQClamp, 1 - kQClamp] before taking logits.
inline constexpr double kQClamp = 1e-5;

ArmEstimate ice_gcomp(const ObservedDataset& data, const Regime& regime, int horizon,
                      const LearnerSpec& q_spec, std::uint64_t seed = 0);

ArmEstimate tmle(const ObservedDataset& data, const Regime& regime, int horizon,
                 const LearnerSpec& q_spec, const LearnerSpec& g_spec, double truncation_bound,
                 std::uint64_t seed = 0);
/// TMLE with a precomputed (possibly oracle) cumulative g.
ArmEstimate tmle(const ObservedDataset& data, const Regime& regime, int horizon,
                 const LearnerSpec& q_spec, const CumulativeG& cumg, std::uint64_t seed = 0);

ArmEstimate iptw(const ObservedDataset& data, const Regime& regime, int horizon,
                 const LearnerSpec& g_spec, double truncation_bound, EstimatorKind variant,
                 std::uint64_t seed = 0);
ArmEstimate iptw(const ObservedDataset& data, const Regime& regime, int horizon,
                 const CumulativeG& cumg, EstimatorKind variant);

/// Runs config.kind for one arm. A g fit shared across arms may be passed in.
ArmEstimate estimate_arm(const ObservedDataset& data, const Regime& regime, int horizon,
                         const EstimatorConfig& config, const GFit* gfit = nullptr);

struct ContrastEstimate {
  ContrastType type = ContrastType::risk_difference;
  double estimate = 0.0;
  /// Influence curve of the estimate, or of its log for relative risks.
  std::vector<double> ic;
  bool log_scale = false;
};

ContrastEstimate contrast(const ArmEstimate& treatment, const ArmEstimate& control,
                          ContrastType type);

struct PipelineResult {
  ArmEstimate treatment;
  ArmEstimate control;
  ContrastEstimate contrast;
  std::vector<PositivityRow> positivity;
};

/// Both arms of an estimand with one shared g fit.
PipelineResult run_pipeline(const ObservedDataset& data, const EstimandSpec& estimand,
                            const EstimatorConfig& config);

struct HorizonEstimate {
  int horizon = 0;
  std::optional<ArmEstimate> estimate;
  std::string error;
};

/// One estimator run per horizon t = 1..K+1. Failures are recorded per horizon.
std::vector<HorizonEstimate> risk_curve(const ObservedDataset& data, const Regime& regime,
                                        const EstimatorConfig& config);

/// Horizons whose estimate is below the previous successful one.
std::vector<int> monotonicity_violations(const std::vector<HorizonEstimate>& curve);

}  // namespace ltrisk
