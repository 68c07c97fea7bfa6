#include <cmath>

#include "ltrisk/errors.hpp"
#include "ltrisk/learners.hpp"

namespace ltrisk {

DesignMatrix build_design(const ObservedDataset& data, std::span<const std::size_t> columns,
                          std::span<const std::size_t> rows) {
  const auto& lay = data.layout();
  DesignMatrix d;
  d.names.push_back("(intercept)");
  std::size_t width = 1;
  for (auto c : columns) width += static_cast<std::size_t>(lay.levels(c) - 1);
  d.x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  d.x.col(0).setOnes();
  Eigen::Index k = 1;
  for (auto c : columns) {
    const int lv = lay.levels(c);
    const auto name = lay.nodes()[c].column_name();
    auto col = data.column(c);
    if (lv == 2) {
      d.names.push_back(name);
      for (std::size_t r = 0; r < rows.size(); ++r)
        d.x(static_cast<Eigen::Index>(r), k) = col[rows[r]];
      ++k;
      continue;
    }
    for (int level = 1; level < lv; ++level) {
      d.names.push_back(name + "=" + std::to_string(level));
      for (std::size_t r = 0; r < rows.size(); ++r)
        d.x(static_cast<Eigen::Index>(r), k) = col[rows[r]] == level ? 1.0 : 0.0;
      ++k;
    }
  }
  return d;
}

DesignMatrix intercept_design(std::size_t n) {
  DesignMatrix d;
  d.names.push_back("(intercept)");
  d.x = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(n), 1);
  return d;
}

double expit(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

namespace detail {

std::vector<std::size_t> informative_columns(const Eigen::MatrixXd& x, std::span<const double> w) {
  std::vector<std::size_t> keep{0};
  const Eigen::Index n = x.rows();
  for (Eigen::Index j = 1; j < x.cols(); ++j) {
    bool constant = true;
    double first = 0.0;
    bool have = false;
    for (Eigen::Index i = 0; i < n && constant; ++i) {
      if (w[static_cast<std::size_t>(i)] <= 0) continue;
      if (!have) {
        first = x(i, j);
        have = true;
      } else if (x(i, j) != first) {
        constant = false;
      }
    }
    if (constant) continue;
    bool duplicate = false;
    for (std::size_t k = 1; k < keep.size() && !duplicate; ++k) {
      const auto jk = static_cast<Eigen::Index>(keep[k]);
      bool same = true;
      for (Eigen::Index i = 0; i < n && same; ++i)
        if (w[static_cast<std::size_t>(i)] > 0 && x(i, j) != x(i, jk)) same = false;
      duplicate = same;
    }
    if (!duplicate) keep.push_back(static_cast<std::size_t>(j));
  }
  return keep;
}

std::pair<double, bool> weighted_mean(std::span<const double> y, std::span<const double> w) {
  double sw = 0.0, swy = 0.0;
  bool constant = true;
  double first = 0.0;
  bool have = false;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (w[i] <= 0) continue;
    if (!std::isfinite(y[i]) || !std::isfinite(w[i])) throw NumericalError("non-finite regression input");
    sw += w[i];
    swy += w[i] * y[i];
    if (!have) {
      first = y[i];
      have = true;
    } else if (y[i] != first) {
      constant = false;
    }
  }
  if (sw <= 0) throw NumericalError("empty regression stratum");
  return {swy / sw, constant};
}

}  // namespace detail

}  // namespace ltrisk
