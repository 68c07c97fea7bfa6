#pragma once

#include <cstddef>
#include <span>

#include <Eigen/Dense>

// Data-parallel inner loops shared by the learners and estimators.
//
// The OpenMP versions reduce over fixed-size row chunks and then add the
// chunk partials in chunk order, so results are bitwise identical for any
// thread count. The reference namespace holds plain serial loops used by
// the tests and the benchmark target.

namespace ltrisk::kernels {

inline constexpr std::size_t kChunkRows = 2048;

void set_threads(int threads);
int threads();

/// gram = X' diag(w) X, xtwz = X' diag(w) z.
void weighted_crossprod(const Eigen::MatrixXd& x, std::span<const double> w,
                        std::span<const double> z, Eigen::MatrixXd& gram, Eigen::VectorXd& xtwz);

/// out = X beta + offset (offset may be empty).
void linear_predictor(const Eigen::MatrixXd& x, const Eigen::VectorXd& beta,
                      std::span<const double> offset, std::span<double> out);

/// sum_i w_i a_i
double weighted_sum(std::span<const double> a, std::span<const double> w);

/// Calls body(k) for k in [0, count). Each k must only write its own slot.
template <class Body>
void parallel_for(std::size_t count, Body&& body) {
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(count); ++k)
    body(static_cast<std::size_t>(k));
}

}  // namespace ltrisk::kernels

namespace ltrisk::reference {

void weighted_crossprod(const Eigen::MatrixXd& x, std::span<const double> w,
                        std::span<const double> z, Eigen::MatrixXd& gram, Eigen::VectorXd& xtwz);
void linear_predictor(const Eigen::MatrixXd& x, const Eigen::VectorXd& beta,
                      std::span<const double> offset, std::span<double> out);
double weighted_sum(std::span<const double> a, std::span<const double> w);

}  // namespace ltrisk::reference
