#include "ltrisk/gmechanism.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ltrisk/csv.hpp"
#include "ltrisk/errors.hpp"
#include "ltrisk/kernels.hpp"
#include "ltrisk/rng.hpp"

namespace ltrisk {

std::vector<std::size_t> g_predictors(const SchemaLayout& lay, std::size_t column) {
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < column; ++c) {
    const auto role = lay.nodes()[c].role;
    if (role == NodeRole::baseline || role == NodeRole::covariate || role == NodeRole::exposure)
      cols.push_back(c);
  }
  return cols;
}

GFit fit_g(const ObservedDataset& data, std::span<const SubjectStatus> status,
           const LearnerSpec& spec, std::uint64_t seed, int max_interval) {
  const auto& lay = data.layout();
  const int K = lay.treatment_intervals();
  if (max_interval < 0 || max_interval > K) max_interval = K;
  if (status.size() != data.n()) throw DataError("fit_g: status length differs from n");
  spec.check();

  GFit fit;
  fit.max_interval = max_interval;
  for (int t = 1; t <= max_interval; ++t) {
    for (std::size_t j = 0; j < lay.exposure_count(); ++j) {
      GNodeFit node;
      node.column = lay.exposure(j, t);
      node.interval = t;
      node.role = NodeRole::exposure;
      node.exposure_index = j;
      fit.nodes.push_back(std::move(node));
    }
    GNodeFit node;
    node.column = lay.censor(t);
    node.interval = t;
    node.role = NodeRole::censor;
    fit.nodes.push_back(std::move(node));
  }

  const std::size_t n = data.n();
  fit.prob.assign(fit.nodes.size(),
                  std::vector<double>(n, std::numeric_limits<double>::quiet_NaN()));
  for (std::size_t k = 0; k < fit.nodes.size(); ++k) {
    auto& node = fit.nodes[k];
    node.predictors = g_predictors(lay, node.column);
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < n; ++i)
      if (status[i].at_risk(node.interval)) rows.push_back(i);
    node.stratum_size = rows.size();
    if (rows.empty()) {
      node.warning = "no subjects at risk at t=" + std::to_string(node.interval);
      continue;
    }
    const auto design = build_design(data, node.predictors, rows);
    std::vector<double> y(rows.size()), w(rows.size(), 1.0);
    std::vector<std::uint64_t> keys(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      y[r] = data.at(rows[r], node.column);
      keys[r] = rows[r];
    }
    FitOptions opt{derive_seed(seed, 0x6A11ULL, node.column), keys};
    node.learner = fit_learner(spec, design, y, w, opt);
    const auto p = node.learner->predict(design);
    for (std::size_t r = 0; r < rows.size(); ++r) fit.prob[k][rows[r]] = p[r];
    if (!node.learner->diagnostics().note.empty()) node.warning = node.learner->diagnostics().note;
  }
  return fit;
}

CumulativeG::CumulativeG(std::size_t n, int intervals, double bound)
    : n_(n), intervals_(intervals), bound_(bound),
      raw_(n * static_cast<std::size_t>(std::max(intervals, 0)), 1.0) {
  if (!(bound > 0.0 && bound <= 1.0)) throw ConfigError("truncation bound must be in (0, 1]");
}

CumulativeG cumulative_g(const GFit& gfit, const ObservedDataset& data,
                         std::span<const SubjectStatus> status, const Regime& regime,
                         double truncation_bound) {
  const std::size_t n = data.n();
  const int T = gfit.max_interval;
  CumulativeG out(n, T, truncation_bound);
  if (gfit.prob.size() != gfit.nodes.size()) throw DataError("cumulative_g: malformed g fit");
  for (std::size_t i = 0; i < n; ++i) {
    double running = 1.0;
    std::size_t k = 0;
    for (int t = 1; t <= T; ++t) {
      double factor = 1.0;
      const bool at_risk = status[i].at_risk(t);
      for (; k < gfit.nodes.size() && gfit.nodes[k].interval == t; ++k) {
        if (!at_risk) continue;
        const double p = gfit.prob[k][i];
        if (std::isnan(p)) {
          // An empty stratum contributes no factor; otherwise g must be present.
          if (gfit.nodes[k].stratum_size == 0 && !gfit.nodes[k].learner) continue;
          throw NumericalError("g probability missing for an at-risk subject");
        }
        const auto& node = gfit.nodes[k];
        if (node.role == NodeRole::censor) {
          factor *= 1.0 - p;
        } else {
          factor *= regime.value(node.exposure_index, t) == 1 ? p : 1.0 - p;
        }
      }
      running *= factor;
      out.set_raw(i, t, running);
    }
  }
  return out;
}

namespace {

// Nearest-rank order statistic of a sorted sample.
double order_stat(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size())));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

}  // namespace

std::vector<PositivityRow> positivity_diagnostics(const CumulativeG& cumg,
                                                  const AdherenceTable& adherence,
                                                  const std::string& arm) {
  std::vector<PositivityRow> rows;
  const std::size_t n = cumg.n();
  std::size_t previous = n;
  for (int t = 1; t <= cumg.intervals(); ++t) {
    PositivityRow row;
    row.arm = arm;
    row.interval = t;
    std::vector<double> g;
    for (std::size_t i = 0; i < n; ++i) {
      if (!adherence(i, t)) continue;
      g.push_back(cumg.raw(i, t));
      if (cumg.truncated(i, t)) ++row.truncated;
    }
    row.adherent = g.size();
    if (row.adherent > previous)
      throw NumericalError("adherent count increased at t=" + std::to_string(t));
    previous = row.adherent;
    row.adherent_fraction = n ? static_cast<double>(g.size()) / static_cast<double>(n) : 0.0;
    std::sort(g.begin(), g.end());
    if (!g.empty()) {
      row.min_g = g.front();
      row.p05_g = order_stat(g, 0.05);
      row.median_g = order_stat(g, 0.5);
    }
    rows.push_back(row);
  }
  return rows;
}

std::string positivity_csv(const std::vector<PositivityRow>& rows) {
  std::ostringstream out;
  out << "arm,interval,adherent,adherent_fraction,min_g,p05_g,median_g,truncated\n";
  for (const auto& r : rows)
    out << r.arm << ',' << r.interval << ',' << r.adherent << ','
        << csv::format_double(r.adherent_fraction) << ',' << csv::format_double(r.min_g) << ','
        << csv::format_double(r.p05_g) << ',' << csv::format_double(r.median_g) << ','
        << r.truncated << '\n';
  return out.str();
}

}  // namespace ltrisk
