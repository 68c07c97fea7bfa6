#include <algorithm>
#include <cmath>
#include <numeric>

#include "ltrisk/errors.hpp"
#include "ltrisk/kernels.hpp"
#include "ltrisk/learners.hpp"
#include "ltrisk/rng.hpp"

namespace ltrisk {

namespace {

double softplus(double e) { return e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e)); }

double soft_threshold(double r, double t) {
  // Treat |r| == t up to rounding as inside the null region so that
  // lambda >= lambda_max gives exact zeros.
  if (std::abs(r) <= t * (1 + 1e-12)) return 0.0;
  return r > 0 ? r - t : r + t;
}

/// Standardized penalized logistic problem over the informative columns.
class PenalizedProblem {
 public:
  PenalizedProblem(const Eigen::MatrixXd& x, std::span<const double> y, std::span<const double> w)
      : y_(y.begin(), y.end()) {
    double sw = 0.0;
    for (double wi : w) sw += wi;
    if (!(sw > 0)) throw NumericalError("empty regression stratum");
    wn_.resize(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) wn_[i] = w[i] / sw;
    used_ = detail::informative_columns(x, w);
    const Eigen::Index n = x.rows();
    const auto q = static_cast<Eigen::Index>(used_.size());
    xs_.resize(n, q);
    xs_.col(0).setOnes();
    means_ = Eigen::VectorXd::Zero(q);
    sds_ = Eigen::VectorXd::Ones(q);
    Eigen::Map<const Eigen::VectorXd> wv(wn_.data(), n);
    for (Eigen::Index k = 1; k < q; ++k) {
      auto col = x.col(static_cast<Eigen::Index>(used_[static_cast<std::size_t>(k)]));
      const double m = wv.dot(col);
      const double var = wv.dot((col.array() - m).square().matrix());
      means_(k) = m;
      sds_(k) = var > 0 ? std::sqrt(var) : 1.0;
      xs_.col(k) = (col.array() - m) / sds_(k);
    }
    ybar_ = 0.0;
    for (std::size_t i = 0; i < y_.size(); ++i) ybar_ += wn_[i] * y_[i];
  }

  Eigen::Index width() const { return xs_.cols(); }
  const std::vector<std::size_t>& used() const { return used_; }

  Eigen::VectorXd null_start() const {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(width());
    b(0) = logit(std::clamp(ybar_, 1e-10, 1 - 1e-10));
    return b;
  }

  double lambda_max(double alpha) const {
    std::vector<double> resid(y_.size());
    for (std::size_t i = 0; i < y_.size(); ++i) resid[i] = y_[i] - ybar_;
    Eigen::MatrixXd g2;
    Eigen::VectorXd g;
    kernels::weighted_crossprod(xs_, wn_, resid, g2, g);
    double m = 0.0;
    for (Eigen::Index k = 1; k < g.size(); ++k) m = std::max(m, std::abs(g(k)));
    return m / std::max(alpha, 1e-3);
  }

  double objective(const Eigen::VectorXd& b, double alpha, double lambda,
                   std::vector<double>& eta) const {
    kernels::linear_predictor(xs_, b, {}, eta);
    double loss = 0.0;
    for (std::size_t i = 0; i < eta.size(); ++i)
      if (wn_[i] > 0) loss += wn_[i] * (softplus(eta[i]) - y_[i] * eta[i]);
    double pen = 0.0;
    for (Eigen::Index k = 1; k < b.size(); ++k)
      pen += alpha * std::abs(b(k)) + 0.5 * (1 - alpha) * b(k) * b(k);
    return loss + lambda * pen;
  }

  Eigen::VectorXd score(const std::vector<double>& eta) const {
    std::vector<double> resid(eta.size());
    for (std::size_t i = 0; i < eta.size(); ++i) resid[i] = y_[i] - expit(eta[i]);
    Eigen::MatrixXd g2;
    Eigen::VectorXd g;
    kernels::weighted_crossprod(xs_, wn_, resid, g2, g);
    return g;
  }

  double kkt(const Eigen::VectorXd& b, const Eigen::VectorXd& g, double alpha,
             double lambda) const {
    double r = std::abs(g(0));
    for (Eigen::Index k = 1; k < b.size(); ++k) {
      if (b(k) != 0.0) {
        const double sgn = b(k) > 0 ? 1.0 : -1.0;
        r = std::max(r, std::abs(-g(k) + lambda * (1 - alpha) * b(k) + lambda * alpha * sgn));
      } else {
        r = std::max(r, std::max(0.0, std::abs(g(k)) - lambda * alpha));
      }
    }
    return r;
  }

  struct Solution {
    Eigen::VectorXd beta;
    double objective = 0.0;
    double kkt = 0.0;
    int iterations = 0;
    bool converged = false;
  };

  /// Proximal Newton: quadratic model of the loss around the current point,
  /// solved exactly by cyclic coordinate descent, then a backtracking step.
  Solution solve(double alpha, double lambda, Eigen::VectorXd b) const {
    const std::size_t n = y_.size();
    std::vector<double> eta(n), vw(n), eta_try(n);
    double f = objective(b, alpha, lambda, eta);
    Solution sol;
    const Eigen::Index q = width();
    Eigen::MatrixXd gram;
    Eigen::VectorXd unused;
    for (int outer = 0; outer < 200; ++outer) {
      Eigen::VectorXd g = score(eta);
      const double res = kkt(b, g, alpha, lambda);
      sol.iterations = outer;
      if (res <= 1e-10) {
        sol.converged = true;
        break;
      }
      for (std::size_t i = 0; i < n; ++i) {
        const double mu = expit(eta[i]);
        vw[i] = wn_[i] * std::max(mu * (1 - mu), 1e-12);
      }
      kernels::weighted_crossprod(xs_, vw, vw, gram, unused);
      // Linear term of the quadratic model: G b + g.
      Eigen::VectorXd rhs = gram * b + g;
      Eigen::VectorXd nb = b;
      Eigen::VectorXd gb = gram * nb;
      for (int sweep = 0; sweep < 10000; ++sweep) {
        double max_change = 0.0;
        for (Eigen::Index k = 0; k < q; ++k) {
          const double gkk = gram(k, k);
          if (gkk <= 0) continue;
          const double r = rhs(k) - (gb(k) - gkk * nb(k));
          double nk;
          if (k == 0)
            nk = r / gkk;
          else
            nk = soft_threshold(r, lambda * alpha) / (gkk + lambda * (1 - alpha));
          const double d = nk - nb(k);
          if (d != 0.0) {
            gb += gram.col(k) * d;
            nb(k) = nk;
            max_change = std::max(max_change, std::abs(d) * std::sqrt(gkk));
          }
        }
        if (max_change < 1e-14) break;
      }
      Eigen::VectorXd dir = nb - b;
      double step = 1.0;
      bool moved = false;
      for (int half = 0; half < 40; ++half) {
        Eigen::VectorXd cand = b + step * dir;
        const double fc = objective(cand, alpha, lambda, eta_try);
        // Near the optimum the decrease is below the rounding of f, so
        // rounding-level increases are accepted.
        if (fc <= f + 1e-13 * std::max(1.0, std::abs(f))) {
          b = cand;
          f = fc;
          eta.swap(eta_try);
          moved = true;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
    }
    Eigen::VectorXd g = score(eta);
    sol.kkt = kkt(b, g, alpha, lambda);
    sol.converged = sol.converged || sol.kkt <= 1e-10;
    sol.objective = f;
    sol.beta = std::move(b);
    return sol;
  }

  /// Coefficients on the original column scale, full design width.
  GlmModel to_model(const Eigen::VectorXd& b) const {
    GlmModel m;
    m.used = used_;
    m.beta = Eigen::VectorXd::Zero(b.size());
    double icpt = b(0);
    for (Eigen::Index k = 1; k < b.size(); ++k) {
      m.beta(k) = b(k) / sds_(k);
      icpt -= b(k) * means_(k) / sds_(k);
    }
    m.beta(0) = icpt;
    return m;
  }

  double ybar() const { return ybar_; }

 private:
  std::vector<double> y_;
  std::vector<double> wn_;
  std::vector<std::size_t> used_;
  Eigen::MatrixXd xs_;
  Eigen::VectorXd means_, sds_;
  double ybar_ = 0.0;
};

LearnerSpec penalized_spec(double alpha) {
  LearnerSpec s;
  s.family = alpha >= 1.0 ? Family::lasso : (alpha <= 0.0 ? Family::ridge : Family::elastic_net);
  s.alpha = alpha;
  return s;
}

void check_inputs(const DesignMatrix& x, std::span<const double> y, std::span<const double> w,
                  double alpha, double lambda) {
  if (y.size() != x.rows() || w.size() != x.rows())
    throw DataError("penalized: design, outcome and weight lengths differ");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("penalized: alpha must lie in [0, 1]");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("penalized: lambda must be >= 0");
  if (!x.x.allFinite()) throw NumericalError("penalized: non-finite design matrix");
  for (std::size_t i = 0; i < y.size(); ++i)
    if (!std::isfinite(y[i]) || !std::isfinite(w[i]) || w[i] < 0)
      throw NumericalError("penalized: non-finite outcome or weight");
}

double binomial_deviance(double y, double mu) {
  mu = std::clamp(mu, 1e-15, 1 - 1e-15);
  double d = 0.0;
  if (y > 0) d += y * std::log(y / mu);
  if (y < 1) d += (1 - y) * std::log((1 - y) / (1 - mu));
  return 2 * d;
}

}  // namespace

double lambda_max(const DesignMatrix& x, std::span<const double> y, std::span<const double> w,
                  double alpha) {
  check_inputs(x, y, w, alpha, 0.0);
  return PenalizedProblem(x.x, y, w).lambda_max(alpha);
}

std::vector<double> lambda_path(double lmax, int size, double ratio) {
  if (size < 1) throw ConfigError("lambda path needs at least one value");
  std::vector<double> path(static_cast<std::size_t>(size));
  if (size == 1) {
    path[0] = lmax;
    return path;
  }
  const double step = std::log(ratio) / (size - 1);
  for (int k = 0; k < size; ++k) path[static_cast<std::size_t>(k)] = lmax * std::exp(step * k);
  path.back() = lmax * ratio;
  return path;
}

double select_lambda_undersmoothed(std::span<const double> path) {
  if (path.empty()) throw ConfigError("undersmoothed selection needs a nonempty path");
  return *std::min_element(path.begin(), path.end());
}

FittedLearner fit_penalized_logistic(const DesignMatrix& x, std::span<const double> y,
                                     std::span<const double> w, double alpha, double lambda) {
  check_inputs(x, y, w, alpha, lambda);
  auto spec = penalized_spec(alpha);
  auto [ybar, constant] = detail::weighted_mean(y, w);
  FitDiagnostics diag;
  diag.lambda = lambda;
  if (constant) {
    diag.degenerate = true;
    diag.note = "constant outcome in stratum";
    return FittedLearner(spec, x.names, ConstantModel{ybar}, diag);
  }
  PenalizedProblem prob(x.x, y, w);
  auto sol = prob.solve(alpha, lambda, prob.null_start());
  diag.iterations = sol.iterations;
  diag.converged = sol.converged;
  diag.objective = sol.objective;
  diag.kkt_residual = sol.kkt;
  return FittedLearner(spec, x.names, prob.to_model(sol.beta), diag);
}

CvResult select_lambda_cv(const DesignMatrix& x, std::span<const double> y,
                          std::span<const double> w, double alpha, const LearnerSpec& spec,
                          const FitOptions& options) {
  check_inputs(x, y, w, alpha, 0.0);
  CvResult res;
  PenalizedProblem full(x.x, y, w);
  res.path = lambda_path(full.lambda_max(alpha), spec.path_size, spec.path_ratio);
  res.cv_deviance.assign(res.path.size(), 0.0);
  const std::size_t n = y.size();
  if (res.path.size() == 1 || n < 2) {
    res.index = 0;
    res.lambda = res.path[0];
    return res;
  }
  const std::size_t folds = std::min<std::size_t>(static_cast<std::size_t>(spec.folds), n);

  // Fold labels from a seeded shuffle of the rows ordered by key.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto key = [&](std::size_t i) { return options.keys.empty() ? i : options.keys[i]; };
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return key(a) != key(b) ? key(a) < key(b) : a < b;
  });
  CounterStream rng(derive_seed(options.seed, 0xC5F01D5ULL));
  for (std::size_t k = n - 1; k > 0; --k) std::swap(order[k], order[rng.below(k + 1)]);
  std::vector<std::size_t> fold(n);
  for (std::size_t k = 0; k < n; ++k) fold[order[k]] = k % folds;

  std::vector<std::vector<double>> fold_dev(folds, std::vector<double>(res.path.size(), 0.0));
  std::vector<double> fold_weight(folds, 0.0);
  std::vector<int> fold_ok(folds, 0);

  kernels::parallel_for(folds, [&](std::size_t f) {
    std::vector<double> wtrain(w.begin(), w.end());
    double wtest = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (fold[i] == f) {
        wtrain[i] = 0.0;
        wtest += w[i];
      }
    double sw = 0.0;
    for (double v : wtrain) sw += v;
    if (sw <= 0 || wtest <= 0) return;
    auto [m, constant] = detail::weighted_mean(y, wtrain);
    (void)m;
    if (constant) return;  // degenerate training fold
    PenalizedProblem prob(x.x, y, wtrain);
    Eigen::VectorXd b = prob.null_start();
    for (std::size_t k = 0; k < res.path.size(); ++k) {
      auto sol = prob.solve(alpha, res.path[k], b);
      b = sol.beta;
      const GlmModel model = prob.to_model(b);
      double dev = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (fold[i] != f || w[i] <= 0) continue;
        double eta = 0.0;
        for (std::size_t c = 0; c < model.used.size(); ++c)
          eta += model.beta(static_cast<Eigen::Index>(c)) *
                 x.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(model.used[c]));
        dev += w[i] * binomial_deviance(y[i], expit(eta));
      }
      fold_dev[f][k] = dev;
    }
    fold_weight[f] = wtest;
    fold_ok[f] = 1;
  });

  double total_weight = 0.0;
  for (std::size_t f = 0; f < folds; ++f) {
    if (!fold_ok[f]) {
      ++res.degenerate_folds;
      continue;
    }
    total_weight += fold_weight[f];
    for (std::size_t k = 0; k < res.path.size(); ++k) res.cv_deviance[k] += fold_dev[f][k];
  }
  if (total_weight <= 0) {
    res.index = 0;
    res.lambda = res.path[0];
    return res;
  }
  for (auto& d : res.cv_deviance) d /= total_weight;
  res.index = static_cast<std::size_t>(
      std::min_element(res.cv_deviance.begin(), res.cv_deviance.end()) - res.cv_deviance.begin());
  res.lambda = res.path[res.index];
  return res;
}

namespace detail {

FittedLearner fit_penalized_selected(const LearnerSpec& spec, const DesignMatrix& x,
                                     std::span<const double> y, std::span<const double> w,
                                     const FitOptions& options) {
  const double alpha = spec.effective_alpha();
  check_inputs(x, y, w, alpha, 0.0);
  auto [ybar, constant] = weighted_mean(y, w);
  FitDiagnostics diag;
  if (constant) {
    diag.degenerate = true;
    diag.note = "constant outcome in stratum";
    return FittedLearner(spec, x.names, ConstantModel{ybar}, diag);
  }
  PenalizedProblem prob(x.x, y, w);
  Eigen::VectorXd b = prob.null_start();
  PenalizedProblem::Solution sol;
  if (spec.lambda_selection == LambdaSelection::undersmoothed) {
    auto path = lambda_path(prob.lambda_max(alpha), spec.path_size, spec.path_ratio);
    diag.lambda = select_lambda_undersmoothed(path);
    sol = prob.solve(alpha, diag.lambda, b);
  } else {
    auto cv = select_lambda_cv(x, y, w, alpha, spec, options);
    diag.lambda = cv.lambda;
    // Warm start along the path up to the selected value.
    for (std::size_t k = 0; k <= cv.index; ++k) {
      sol = prob.solve(alpha, cv.path[k], b);
      b = sol.beta;
    }
    if (cv.degenerate_folds > 0)
      diag.note = std::to_string(cv.degenerate_folds) + " degenerate CV fold(s) skipped";
  }
  diag.iterations = sol.iterations;
  diag.converged = sol.converged;
  diag.objective = sol.objective;
  diag.kkt_residual = sol.kkt;
  return FittedLearner(spec, x.names, prob.to_model(sol.beta), diag);
}

}  // namespace detail

}  // namespace ltrisk
