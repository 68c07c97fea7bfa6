#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ltrisk/estimators.hpp"
#include "ltrisk/inference.hpp"

namespace ltrisk {

inline constexpr const char* kVersion = "0.4.0";
/// Bumped whenever a JSON config or result layout changes.
inline constexpr int kConfigSchemaVersion = 1;

IntervalMethod interval_method_from_string(std::string_view s);

/// A learner is either a family name ("glm") or an object with "family" and
/// optional tuning keys.
LearnerSpec learner_from_json(const nlohmann::json& j);
nlohmann::ordered_json learner_to_json(const LearnerSpec& s);

EstimatorConfig estimator_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json estimator_config_to_json(const EstimatorConfig& c);

/// {"name": ..., "sustained": [v per exposure]} or
/// {"name": ..., "assignments": [[v per interval] per exposure]}.
Regime regime_from_json(const nlohmann::json& j, const SchemaLayout& layout);
nlohmann::ordered_json regime_to_json(const Regime& r);

/// Missing arms default to sustained use (1) versus no use (0) of every
/// exposure; the horizon defaults to K + 1.
EstimandSpec estimand_from_json(const nlohmann::json& j, const SchemaLayout& layout);
nlohmann::ordered_json estimand_to_json(const EstimandSpec& e);

struct InferenceConfig {
  std::vector<IntervalMethod> methods{IntervalMethod::ic};
  int bootstrap_replicates = 500;
  double level = 0.95;

  bool needs_bootstrap() const;
};

InferenceConfig inference_config_from_json(const nlohmann::json& j);

/// Payload of the fit and diagnose commands.
struct FitConfig {
  EstimandSpec estimand;
  EstimatorConfig estimator;
  InferenceConfig inference;
  bool risk_curve = false;

  /// Cross-validated, forest or bootstrap settings draw random numbers.
  bool stochastic() const;
};

FitConfig fit_config_from_json(const nlohmann::json& j, const SchemaLayout& layout);

/// Risk difference in percentage points with two decimals, "-0.03" for
/// 0.0071 - 0.0074. Negative zero prints as "0.00".
std::string format_rd_percent(double rd);

}  // namespace ltrisk
