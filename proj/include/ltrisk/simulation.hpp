#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ltrisk/data_model.hpp"

namespace ltrisk {

/// Predictor feature of a coefficient matrix: a binary node itself, or one
/// indicator "<node>=<level>" of a categorical node.
struct Feature {
  std::string name;
  std::size_t column = 0;
  int level = 1;  // indicator of value == level; binary nodes use 1
};

enum class RowKind { logistic, det0, det1 };

/// One generative row. Binary nodes have one row named after the column;
/// a categorical node with L levels has rows "<node>>=k", k = 1..L-1, giving
/// P(value >= k | value >= k-1, past).
struct CoefficientRow {
  std::string name;
  std::size_t column = 0;
  int level = 1;
  RowKind kind = RowKind::logistic;
  double intercept = 0.0;
  std::vector<double> beta;              // per feature
  std::vector<std::uint8_t> present;     // per feature; absent entries are empty in CSV
  bool flagged = false;                  // degenerate fit (fit_dgp_coefficients only)
};

class CoefficientMatrix {
 public:
  explicit CoefficientMatrix(std::shared_ptr<const SchemaLayout> layout);

  const SchemaLayout& layout() const { return *layout_; }
  const std::shared_ptr<const SchemaLayout>& layout_ptr() const { return layout_; }
  const std::vector<Feature>& features() const { return features_; }
  const std::vector<CoefficientRow>& rows() const { return rows_; }
  std::vector<CoefficientRow>& rows() { return rows_; }

  std::size_t feature_index(std::string_view name) const;
  CoefficientRow& row(std::string_view name);
  const CoefficientRow& row(std::string_view name) const;

  /// Sets a logistic coefficient; "intercept" names the intercept.
  CoefficientMatrix& set(std::string_view row, std::string_view feature, double value);
  CoefficientMatrix& set_deterministic(std::string_view row, int value);

  /// Rows may reference only features of strictly preceding nodes.
  void check() const;

  bool operator==(const CoefficientMatrix& other) const;

 private:
  std::shared_ptr<const SchemaLayout> layout_;
  std::vector<Feature> features_;
  std::vector<CoefficientRow> rows_;
};

std::string format_coefficients_csv(const CoefficientMatrix& m);
CoefficientMatrix parse_coefficients_csv(std::string_view text,
                                         std::shared_ptr<const SchemaLayout> layout);
/// Writes the CSV and its sidecar schema.
void write_coefficients(const std::filesystem::path& path, const CoefficientMatrix& m);
/// Reads the CSV using its sidecar schema.
CoefficientMatrix read_coefficients(const std::filesystem::path& path);

/// Unpenalized logistic fit per generative row among subjects still at risk
/// at that node. Rows whose outcome is constant (or nobody is at risk)
/// become deterministic.
CoefficientMatrix fit_dgp_coefficients(const ObservedDataset& data);

/// Sequential draws with one uniform per row from the per-subject stream
/// derive_seed(seed, i). After a terminal event the remaining cells carry
/// their last value (0 for series not yet started).
ObservedDataset simulate_dataset(const CoefficientMatrix& m, std::size_t n, std::uint64_t seed);

/// Joint permutation of the (Y, D, C) block across subjects; other nodes
/// keep their subject and are re-padded after the new event times.
ObservedDataset permute_null(const ObservedDataset& data, std::uint64_t seed);
ObservedDataset permute_block(const ObservedDataset& data, std::span<const std::size_t> perm);
std::vector<std::size_t> null_permutation(std::size_t n, std::uint64_t seed);

struct TruthResult {
  double risk_treatment = 0.0;
  double risk_control = 0.0;
  double rd = 0.0;
  double se_treatment = 0.0;
  double se_control = 0.0;
  double se_rd = 0.0;
  std::size_t n_mc = 0;
  std::string method;
};

/// Counterfactual truth for the dependent scenario: every subject is drawn
/// under both regimes with common random numbers, exposures forced and C = 0.
TruthResult compute_truth(const CoefficientMatrix& m, const Regime& treatment,
                          const Regime& control, int horizon, std::size_t n_mc,
                          std::uint64_t seed);

/// Truth for the permuted-null scenario. Outcome histories are independent
/// of covariates and exposures there, so each arm's risk is the discrete-time
/// cumulative incidence of the simulated (Y, D, C) block with censoring
/// removed. Each arm uses an independent donor sample; MC-SE from 20 batches.
TruthResult compute_null_truth(const CoefficientMatrix& m, const Regime& treatment,
                               const Regime& control, int horizon, std::size_t n_mc,
                               std::uint64_t seed);

enum class ScenarioKind { dependent, permuted_null };

std::string_view to_string(ScenarioKind k);
ScenarioKind scenario_from_string(std::string_view s);

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::dependent;
  std::size_t n = 1000;
  std::uint64_t seed = 1;
  std::uint64_t permutation_seed = 2;
};

ObservedDataset generate_scenario(const CoefficientMatrix& m, const ScenarioSpec& spec);
TruthResult scenario_truth(const CoefficientMatrix& m, ScenarioKind kind, const Regime& treatment,
                           const Regime& control, int horizon, std::size_t n_mc,
                           std::uint64_t seed);

}  // namespace ltrisk
