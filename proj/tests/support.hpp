#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ltrisk/data_model.hpp"
#include "ltrisk/rng.hpp"

namespace testing {

using namespace ltrisk;

inline std::shared_ptr<const SchemaLayout> make_layout(std::vector<std::string> baseline,
                                                       std::vector<std::string> covariates,
                                                       std::vector<std::string> exposures,
                                                       int intervals,
                                                       std::map<std::string, int> levels = {}) {
  NodeSchema s;
  s.baseline_nodes = std::move(baseline);
  s.covariate_nodes = std::move(covariates);
  s.exposure_nodes = std::move(exposures);
  s.intervals = intervals;
  s.levels = std::move(levels);
  return std::make_shared<const SchemaLayout>(std::move(s));
}

/// Sets cells by column name on an all-zero dataset.
struct Rows {
  ObservedDataset data;
  explicit Rows(std::shared_ptr<const SchemaLayout> layout, std::size_t n)
      : data(std::move(layout), n) {}
  Rows& set(std::size_t i, const std::string& col, int v) {
    data.at(i, *data.layout().find(col)) = v;
    return *this;
  }
  int get(std::size_t i, const std::string& col) const {
    return data.at(i, *data.layout().find(col));
  }
};

/// Sequential simulation with fixed logistic-ish probabilities: each node is
/// Bernoulli(base + lift * (previous value of the same series)) clipped, plus
/// mild dependence on the first baseline node. Terminal events then pad by
/// LVCF, so the result is always valid.
struct ToyRates {
  double baseline = 0.5;
  double covariate = 0.4;
  double exposure = 0.5;
  double outcome = 0.1;
  double competing = 0.05;
  double censor = 0.05;
  bool first_interval_events = true;  // false: Y(1), D(1), C(1) fixed at 0
};

inline ObservedDataset toy_dataset(std::shared_ptr<const SchemaLayout> layout, std::size_t n,
                                   std::uint64_t seed, const ToyRates& r = {}) {
  ObservedDataset d(layout, n);
  const auto& lay = *layout;
  for (std::size_t i = 0; i < n; ++i) {
    CounterStream rng(derive_seed(seed, i));
    int w0 = 0;
    bool stopped = false;
    for (std::size_t c = 0; c < lay.size(); ++c) {
      const auto& ref = lay.nodes()[c];
      if (stopped) {
        d.at(i, c) = kMissing;
        continue;
      }
      double p = 0.5;
      switch (ref.role) {
        case NodeRole::baseline: p = r.baseline; break;
        case NodeRole::covariate: p = r.covariate + 0.2 * w0; break;
        case NodeRole::exposure: p = r.exposure + 0.15 * w0; break;
        case NodeRole::outcome: p = r.outcome * (1 + w0); break;
        case NodeRole::competing: p = r.competing; break;
        case NodeRole::censor: p = r.censor; break;
      }
      if (!r.first_interval_events && ref.is_event() && ref.interval == 1) p = 0.0;
      p = std::min(std::max(p, 0.0), 1.0);
      int levels = lay.levels(c);
      int v = levels > 2 ? static_cast<int>(rng.below(static_cast<std::uint64_t>(levels)))
                         : (rng.bernoulli(p) ? 1 : 0);
      d.at(i, c) = v;
      if (ref.role == NodeRole::baseline && c == 0) w0 = v;
      if (ref.is_event() && v == 1) stopped = true;
    }
  }
  return apply_lvcf(d);
}

}  // namespace testing
