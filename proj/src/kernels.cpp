#include "ltrisk/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <vector>

namespace ltrisk::kernels {

void set_threads(int threads) {
  if (threads > 0) omp_set_num_threads(threads);
}

int threads() { return omp_get_max_threads(); }

void weighted_crossprod(const Eigen::MatrixXd& x, std::span<const double> w,
                        std::span<const double> z, Eigen::MatrixXd& gram, Eigen::VectorXd& xtwz) {
  const std::ptrdiff_t n = x.rows();
  const std::ptrdiff_t p = x.cols();
  const std::ptrdiff_t chunks = (n + static_cast<std::ptrdiff_t>(kChunkRows) - 1) /
                                static_cast<std::ptrdiff_t>(kChunkRows);
  std::vector<Eigen::MatrixXd> part_gram(static_cast<std::size_t>(chunks));
  std::vector<Eigen::VectorXd> part_z(static_cast<std::size_t>(chunks));

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < chunks; ++c) {
    const std::ptrdiff_t lo = c * static_cast<std::ptrdiff_t>(kChunkRows);
    const std::ptrdiff_t len = std::min<std::ptrdiff_t>(kChunkRows, n - lo);
    Eigen::Map<const Eigen::VectorXd> wc(w.data() + lo, len);
    Eigen::Map<const Eigen::VectorXd> zc(z.data() + lo, len);
    auto block = x.middleRows(lo, len);
    Eigen::MatrixXd wx = block.array().colwise() * wc.array();
    auto& g = part_gram[static_cast<std::size_t>(c)];
    g.noalias() = wx.transpose() * block;
    part_z[static_cast<std::size_t>(c)].noalias() = wx.transpose() * zc;
  }
  gram.setZero(p, p);
  xtwz.setZero(p);
  for (std::ptrdiff_t c = 0; c < chunks; ++c) {
    gram += part_gram[static_cast<std::size_t>(c)];
    xtwz += part_z[static_cast<std::size_t>(c)];
  }
  // The blocked product is not exactly symmetric; mirror the lower triangle.
  gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
}

void linear_predictor(const Eigen::MatrixXd& x, const Eigen::VectorXd& beta,
                      std::span<const double> offset, std::span<double> out) {
  const std::ptrdiff_t n = x.rows();
  const std::ptrdiff_t chunks = (n + static_cast<std::ptrdiff_t>(kChunkRows) - 1) /
                                static_cast<std::ptrdiff_t>(kChunkRows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < chunks; ++c) {
    const std::ptrdiff_t lo = c * static_cast<std::ptrdiff_t>(kChunkRows);
    const std::ptrdiff_t len = std::min<std::ptrdiff_t>(kChunkRows, n - lo);
    Eigen::Map<Eigen::VectorXd> oc(out.data() + lo, len);
    oc.noalias() = x.middleRows(lo, len) * beta;
    if (!offset.empty()) oc += Eigen::Map<const Eigen::VectorXd>(offset.data() + lo, len);
  }
}

double weighted_sum(std::span<const double> a, std::span<const double> w) {
  const std::size_t n = a.size();
  const std::size_t chunks = (n + kChunkRows - 1) / kChunkRows;
  std::vector<double> part(chunks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
    const std::size_t lo = static_cast<std::size_t>(c) * kChunkRows;
    const std::size_t hi = std::min(n, lo + kChunkRows);
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += a[i] * w[i];
    part[static_cast<std::size_t>(c)] = s;
  }
  double total = 0.0;
  for (double s : part) total += s;
  return total;
}

}  // namespace ltrisk::kernels
