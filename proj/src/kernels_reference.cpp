#include "ltrisk/kernels.hpp"

namespace ltrisk::reference {

void weighted_crossprod(const Eigen::MatrixXd& x, std::span<const double> w,
                        std::span<const double> z, Eigen::MatrixXd& gram, Eigen::VectorXd& xtwz) {
  const auto n = x.rows();
  const auto p = x.cols();
  gram.setZero(p, p);
  xtwz.setZero(p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double wi = w[static_cast<std::size_t>(i)];
    if (wi == 0.0) continue;
    for (Eigen::Index a = 0; a < p; ++a) {
      const double xa = wi * x(i, a);
      xtwz(a) += xa * z[static_cast<std::size_t>(i)];
      for (Eigen::Index b = 0; b <= a; ++b) gram(a, b) += xa * x(i, b);
    }
  }
  for (Eigen::Index a = 0; a < p; ++a)
    for (Eigen::Index b = a + 1; b < p; ++b) gram(a, b) = gram(b, a);
}

void linear_predictor(const Eigen::MatrixXd& x, const Eigen::VectorXd& beta,
                      std::span<const double> offset, std::span<double> out) {
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double eta = offset.empty() ? 0.0 : offset[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < x.cols(); ++j) eta += x(i, j) * beta(j);
    out[static_cast<std::size_t>(i)] = eta;
  }
}

double weighted_sum(std::span<const double> a, std::span<const double> w) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * w[i];
  return s;
}

}  // namespace ltrisk::reference
