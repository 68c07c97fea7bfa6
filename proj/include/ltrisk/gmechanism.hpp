#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ltrisk/data_model.hpp"
#include "ltrisk/learners.hpp"

namespace ltrisk {

/// One A-block node (an exposure or the censoring indicator) at one interval.
struct GNodeFit {
  std::size_t column = 0;
  int interval = 0;
  NodeRole role = NodeRole::exposure;
  std::size_t exposure_index = 0;  // meaningful for exposures only
  std::vector<std::size_t> predictors;
  std::optional<FittedLearner> learner;  // empty: nobody at risk, g = 1
  std::size_t stratum_size = 0;
  std::string warning;
};

/// Treatment and censoring mechanism. prob[k][i] is the fitted
/// P(node_k = 1 | past) for subject i when i is at risk at the node's
/// interval, NaN otherwise.
struct GFit {
  std::vector<GNodeFit> nodes;
  std::vector<std::vector<double>> prob;
  int max_interval = 0;
};

/// History columns that precede an A-block node: W, covariates up to t,
/// exposures before the node. Event indicators are constant among the at-risk
/// and left out.
std::vector<std::size_t> g_predictors(const SchemaLayout& layout, std::size_t column);

/// Fits every A-block node for t = 1..max_interval (default K) among subjects
/// at risk at that interval.
GFit fit_g(const ObservedDataset& data, std::span<const SubjectStatus> status,
           const LearnerSpec& spec, std::uint64_t seed, int max_interval = -1);

/// Running product of regime-consistent factors, floored at the bound.
/// Matrices are n x K, stored row-major as value(i, t) for t = 1..K.
class CumulativeG {
 public:
  CumulativeG(std::size_t n, int intervals, double bound);

  double raw(std::size_t i, int t) const { return raw_[idx(i, t)]; }
  double value(std::size_t i, int t) const { return std::max(raw_[idx(i, t)], bound_); }
  bool truncated(std::size_t i, int t) const { return raw_[idx(i, t)] < bound_; }
  double bound() const { return bound_; }
  int intervals() const { return intervals_; }
  std::size_t n() const { return n_; }

  void set_raw(std::size_t i, int t, double v) { raw_[idx(i, t)] = v; }

 private:
  std::size_t idx(std::size_t i, int t) const {
    return i * static_cast<std::size_t>(intervals_) + static_cast<std::size_t>(t - 1);
  }
  std::size_t n_;
  int intervals_;
  double bound_;
  std::vector<double> raw_;
};

/// Factor for (i, s) is 1 when i is not at risk at s; otherwise the product
/// over exposures of p or 1 - p (per the regime value) times 1 - P(C = 1).
CumulativeG cumulative_g(const GFit& gfit, const ObservedDataset& data,
                         std::span<const SubjectStatus> status, const Regime& regime,
                         double truncation_bound);

struct PositivityRow {
  std::string arm;
  int interval = 0;
  std::size_t adherent = 0;
  double adherent_fraction = 0.0;
  double min_g = 1.0;
  double p05_g = 1.0;
  double median_g = 1.0;
  std::size_t truncated = 0;
};

std::vector<PositivityRow> positivity_diagnostics(const CumulativeG& cumg,
                                                  const AdherenceTable& adherence,
                                                  const std::string& arm);

std::string positivity_csv(const std::vector<PositivityRow>& rows);

}  // namespace ltrisk
