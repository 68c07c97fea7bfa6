#include <algorithm>
#include <cmath>
#include <numeric>

#include "ltrisk/errors.hpp"
#include "ltrisk/kernels.hpp"
#include "ltrisk/learners.hpp"
#include "ltrisk/rng.hpp"

namespace ltrisk {

namespace {

struct TreeBuilder {
  const Eigen::MatrixXd& x;
  std::span<const double> y;
  std::vector<double> wt;  // prior weight times in-bag count
  std::span<const std::uint64_t> keys;
  std::vector<std::size_t> features;  // candidate design columns
  std::size_t mtry;
  double min_leaf;
  std::uint64_t tree_seed;
  std::vector<TreeNode> nodes;

  std::uint64_t key(std::size_t i) const { return keys.empty() ? i : keys[i]; }

  double mean_of(const std::vector<std::size_t>& rows) const {
    double sw = 0, swy = 0;
    for (auto i : rows) {
      sw += wt[i];
      swy += wt[i] * y[i];
    }
    return sw > 0 ? swy / sw : 0.0;
  }

  int build(std::vector<std::size_t> rows, std::uint64_t node_id) {
    const int index = static_cast<int>(nodes.size());
    nodes.push_back({});
    nodes[static_cast<std::size_t>(index)].value = mean_of(rows);

    double count = 0;
    for (auto i : rows) count += wt[i];
    if (count < 2 * min_leaf || features.empty()) return index;

    // Candidate features for this node.
    std::vector<std::size_t> cand = features;
    CounterStream rng(derive_seed(tree_seed, node_id));
    const std::size_t m = std::min(mtry, cand.size());
    for (std::size_t k = 0; k < m; ++k) std::swap(cand[k], cand[k + rng.below(cand.size() - k)]);
    cand.resize(m);
    std::sort(cand.begin(), cand.end());

    double best_gain = 0.0;
    int best_feature = -1;
    double best_threshold = 0.0;
    double total_w = 0, total_wy = 0;
    for (auto i : rows) {
      total_w += wt[i];
      total_wy += wt[i] * y[i];
    }
    std::vector<std::size_t> sorted = rows;
    for (auto f : cand) {
      const auto fc = static_cast<Eigen::Index>(f);
      std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
        const double xa = x(static_cast<Eigen::Index>(a), fc), xb = x(static_cast<Eigen::Index>(b), fc);
        if (xa != xb) return xa < xb;
        return key(a) != key(b) ? key(a) < key(b) : a < b;
      });
      double lw = 0, lwy = 0;
      for (std::size_t k = 0; k + 1 < sorted.size(); ++k) {
        const auto i = sorted[k];
        lw += wt[i];
        lwy += wt[i] * y[i];
        const double xi = x(static_cast<Eigen::Index>(i), fc);
        const double xn = x(static_cast<Eigen::Index>(sorted[k + 1]), fc);
        if (xi == xn) continue;
        const double rw = total_w - lw;
        if (lw < min_leaf || rw < min_leaf) continue;
        const double rwy = total_wy - lwy;
        // Reduction in weighted squared error.
        const double gain = lwy * lwy / lw + rwy * rwy / rw - total_wy * total_wy / total_w;
        if (gain > best_gain * (1 + 1e-12) + 1e-15) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_threshold = 0.5 * (xi + xn);
        }
      }
    }
    if (best_feature < 0) return index;

    std::vector<std::size_t> left, right;
    for (auto i : rows)
      (x(static_cast<Eigen::Index>(i), best_feature) <= best_threshold ? left : right).push_back(i);
    rows.clear();
    rows.shrink_to_fit();
    const int l = build(std::move(left), 2 * node_id + 1);
    const int r = build(std::move(right), 2 * node_id + 2);
    auto& node = nodes[static_cast<std::size_t>(index)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = r;
    return index;
  }
};

}  // namespace

FittedLearner fit_random_forest(const DesignMatrix& x, std::span<const double> y,
                                std::span<const double> w, const LearnerSpec& spec,
                                const FitOptions& options) {
  if (y.size() != x.rows() || w.size() != x.rows())
    throw DataError("forest: design, outcome and weight lengths differ");
  LearnerSpec s = spec;
  s.family = Family::random_forest;
  auto [ybar, constant] = detail::weighted_mean(y, w);
  FitDiagnostics diag;
  if (constant) {
    diag.degenerate = true;
    diag.note = "constant outcome in stratum";
    return FittedLearner(s, x.names, ConstantModel{ybar}, diag);
  }
  const std::size_t n = y.size();
  std::vector<std::size_t> features;
  for (std::size_t j = 1; j < x.cols(); ++j) features.push_back(j);
  const std::size_t mtry =
      spec.mtry > 0 ? static_cast<std::size_t>(spec.mtry)
                    : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(features.size()))));

  ForestModel forest;
  forest.trees.resize(static_cast<std::size_t>(spec.trees));
  kernels::parallel_for(forest.trees.size(), [&](std::size_t t) {
    const std::uint64_t tree_seed = derive_seed(options.seed, 0xF0E57ULL, t);
    TreeBuilder b{x.x, y, std::vector<double>(n, 0.0), options.keys, features, mtry,
                  static_cast<double>(spec.min_leaf), tree_seed, {}};
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < n; ++i) {
      if (w[i] <= 0) continue;
      // Poisson(1) in-bag count keyed to the subject, independent of row order.
      const int count = n == 1 ? 1 : CounterStream(derive_seed(tree_seed, b.key(i))).poisson1();
      if (count == 0) continue;
      b.wt[i] = w[i] * count;
      rows.push_back(i);
    }
    if (rows.empty()) {
      forest.trees[t] = {TreeNode{-1, 0.0, -1, -1, ybar}};
      return;
    }
    b.build(std::move(rows), 0);
    forest.trees[t] = std::move(b.nodes);
  });
  diag.iterations = spec.trees;
  return FittedLearner(s, x.names, std::move(forest), diag);
}

}  // namespace ltrisk
