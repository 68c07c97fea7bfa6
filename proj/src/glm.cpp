#include <algorithm>
#include <cmath>

#include "ltrisk/errors.hpp"
#include "ltrisk/kernels.hpp"
#include "ltrisk/learners.hpp"

namespace ltrisk {

namespace {

double weighted_deviance(std::span<const double> y, std::span<const double> w,
                         std::span<const double> eta) {
  double dev = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (w[i] <= 0) continue;
    // -loglik of a quasi-binomial observation, written to stay finite for
    // large |eta|: log(1 + e^eta) - y * eta.
    const double e = eta[i];
    const double softplus = e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
    dev += w[i] * (softplus - y[i] * e);
  }
  return dev;
}

}  // namespace

FittedLearner fit_logistic_glm(const DesignMatrix& x, std::span<const double> y,
                               std::span<const double> w) {
  LearnerSpec spec;
  spec.family = x.cols() == 1 ? Family::glm_unadjusted : Family::glm_adjusted;
  if (y.size() != x.rows() || w.size() != x.rows())
    throw DataError("glm: design, outcome and weight lengths differ");

  auto [ybar, constant] = detail::weighted_mean(y, w);
  FitDiagnostics diag;
  if (constant) {
    diag.degenerate = true;
    diag.note = "constant outcome in stratum";
    return FittedLearner(spec, x.names, ConstantModel{ybar}, diag);
  }

  double sw = 0.0;
  for (double wi : w) sw += wi;
  std::vector<double> wn(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) wn[i] = w[i] / sw;

  const auto used = detail::informative_columns(x.x, w);
  Eigen::MatrixXd xs(x.x.rows(), static_cast<Eigen::Index>(used.size()));
  for (std::size_t k = 0; k < used.size(); ++k)
    xs.col(static_cast<Eigen::Index>(k)) = x.x.col(static_cast<Eigen::Index>(used[k]));

  const std::size_t n = y.size();
  const Eigen::Index p = xs.cols();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  beta(0) = logit(std::clamp(ybar, 1e-10, 1 - 1e-10));

  std::vector<double> eta(n), vw(n);
  kernels::linear_predictor(xs, beta, {}, eta);
  double dev = weighted_deviance(y, wn, eta);
  Eigen::MatrixXd gram;
  Eigen::VectorXd rhs;
  Eigen::VectorXd grad(p);

  auto gradient = [&](std::span<const double> et) {
    std::vector<double> resid(n);
    for (std::size_t i = 0; i < n; ++i) resid[i] = y[i] - expit(et[i]);
    Eigen::MatrixXd g2;
    Eigen::VectorXd g;
    kernels::weighted_crossprod(xs, wn, resid, g2, g);
    return g;
  };

  int iter = 0;
  bool converged = false;
  const int max_iter = 100;
  for (; iter < max_iter; ++iter) {
    grad = gradient(eta);
    if (grad.cwiseAbs().maxCoeff() * sw <= 1e-9) {
      converged = true;
      break;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double mu = expit(eta[i]);
      vw[i] = wn[i] * std::max(mu * (1 - mu), 1e-12);
    }
    // Newton step: solve (X'VX) delta = X'W(y - mu).
    kernels::weighted_crossprod(xs, vw, vw, gram, rhs);
    Eigen::VectorXd delta = gram.completeOrthogonalDecomposition().solve(grad);
    double step = 1.0;
    std::vector<double> eta_new(n);
    double dev_new = dev;
    for (int half = 0; half < 30; ++half) {
      Eigen::VectorXd cand = beta + step * delta;
      kernels::linear_predictor(xs, cand, {}, eta_new);
      dev_new = weighted_deviance(y, wn, eta_new);
      if (dev_new <= dev + 1e-13 * std::max(1.0, std::abs(dev))) {
        beta = cand;
        break;
      }
      step *= 0.5;
    }
    if (step < 1e-8) break;  // no further descent available at machine precision
    eta.swap(eta_new);
    dev = dev_new;
  }
  grad = gradient(eta);
  diag.iterations = iter;
  diag.converged = converged;
  diag.objective = dev;
  diag.gradient_max = grad.cwiseAbs().maxCoeff() * sw;
  if (!converged) diag.note = "IRLS stopped before the gradient tolerance (possible separation)";
  return FittedLearner(spec, x.names, GlmModel{used, beta}, diag);
}

}  // namespace ltrisk
