#include <cmath>

#include "ltrisk/errors.hpp"
#include "ltrisk/kernels.hpp"
#include "ltrisk/learners.hpp"

namespace ltrisk {

std::string_view to_string(Family f) {
  switch (f) {
    case Family::glm_adjusted: return "glm_adjusted";
    case Family::glm_unadjusted: return "glm_unadjusted";
    case Family::lasso: return "lasso";
    case Family::ridge: return "ridge";
    case Family::elastic_net: return "elastic_net";
    case Family::random_forest: return "random_forest";
    case Family::saturated: return "saturated";
  }
  return "?";
}

Family family_from_string(std::string_view s) {
  for (auto f : {Family::glm_adjusted, Family::glm_unadjusted, Family::lasso, Family::ridge,
                 Family::elastic_net, Family::random_forest, Family::saturated})
    if (to_string(f) == s) return f;
  if (s == "glm") return Family::glm_adjusted;
  if (s == "intercept_only") return Family::glm_unadjusted;
  throw ConfigError("unknown learner family '" + std::string(s) + "'");
}

std::string_view to_string(LambdaSelection s) {
  return s == LambdaSelection::cv_min ? "cv_min" : "undersmoothed";
}

LambdaSelection lambda_selection_from_string(std::string_view s) {
  if (s == "cv_min") return LambdaSelection::cv_min;
  if (s == "undersmoothed") return LambdaSelection::undersmoothed;
  throw ConfigError("unknown lambda selection '" + std::string(s) + "'");
}

std::string LearnerSpec::label() const {
  std::string s(to_string(family));
  if (penalized()) s += "/" + std::string(to_string(lambda_selection));
  return s;
}

void LearnerSpec::check() const {
  if (family == Family::elastic_net && !(alpha > 0.0 && alpha < 1.0))
    throw ConfigError("elastic_net alpha must lie in (0, 1)");
  if (penalized()) {
    if (folds < 2) throw ConfigError("learner: folds must be >= 2");
    if (path_size < 1) throw ConfigError("learner: path_size must be >= 1");
    if (!(path_ratio > 0.0 && path_ratio <= 1.0)) throw ConfigError("learner: path_ratio in (0, 1]");
  }
  if (family == Family::random_forest) {
    if (trees < 1) throw ConfigError("learner: trees must be >= 1");
    if (min_leaf < 1) throw ConfigError("learner: min_leaf must be >= 1");
  }
}

FittedLearner::FittedLearner(LearnerSpec spec, std::vector<std::string> names, LearnerModel model,
                             FitDiagnostics diagnostics)
    : spec_(std::move(spec)),
      names_(std::move(names)),
      model_(std::move(model)),
      diag_(std::move(diagnostics)) {}

namespace {

struct Predictor {
  const DesignMatrix& x;
  std::vector<double>& out;

  void operator()(const ConstantModel& m) const {
    std::fill(out.begin(), out.end(), m.p);
  }
  void operator()(const GlmModel& m) const {
    Eigen::MatrixXd xs(x.x.rows(), static_cast<Eigen::Index>(m.used.size()));
    for (std::size_t k = 0; k < m.used.size(); ++k)
      xs.col(static_cast<Eigen::Index>(k)) = x.x.col(static_cast<Eigen::Index>(m.used[k]));
    kernels::linear_predictor(xs, m.beta, {}, out);
    for (auto& v : out) v = expit(v);
  }
  void operator()(const SaturatedModel& m) const {
    std::vector<double> key(x.cols() - 1);
    for (Eigen::Index i = 0; i < x.x.rows(); ++i) {
      for (std::size_t j = 1; j < x.cols(); ++j) key[j - 1] = x.x(i, static_cast<Eigen::Index>(j));
      auto it = m.cells.find(key);
      out[static_cast<std::size_t>(i)] = it == m.cells.end() ? m.fallback : it->second;
    }
  }
  void operator()(const ForestModel& m) const {
    std::fill(out.begin(), out.end(), 0.0);
    for (const auto& tree : m.trees) {
      for (Eigen::Index i = 0; i < x.x.rows(); ++i) {
        int node = 0;
        while (tree[static_cast<std::size_t>(node)].feature >= 0) {
          const auto& nd = tree[static_cast<std::size_t>(node)];
          node = x.x(i, nd.feature) <= nd.threshold ? nd.left : nd.right;
        }
        out[static_cast<std::size_t>(i)] += tree[static_cast<std::size_t>(node)].value;
      }
    }
    for (auto& v : out) v /= static_cast<double>(m.trees.size());
  }
};

}  // namespace

std::vector<double> FittedLearner::predict(const DesignMatrix& x) const {
  if (x.names != names_) throw DataError("predict: design columns do not match the training columns");
  std::vector<double> out(x.rows());
  std::visit(Predictor{x, out}, model_);
  // Saturated fits are the nonparametric oracle and return exact cell means.
  if (spec_.family != Family::saturated)
    for (auto& v : out) v = clamp_probability(v);
  return out;
}

Eigen::VectorXd FittedLearner::coefficients() const {
  Eigen::VectorXd full = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(names_.size()));
  if (const auto* g = std::get_if<GlmModel>(&model_)) {
    for (std::size_t k = 0; k < g->used.size(); ++k)
      full(static_cast<Eigen::Index>(g->used[k])) = g->beta(static_cast<Eigen::Index>(k));
    return full;
  }
  if (const auto* c = std::get_if<ConstantModel>(&model_)) {
    full(0) = logit(clamp_probability(c->p));
    return full;
  }
  return {};
}

std::vector<double> predict_probability(const FittedLearner& learner, const DesignMatrix& x) {
  return learner.predict(x);
}

FittedLearner fit_saturated(const DesignMatrix& x, std::span<const double> y,
                            std::span<const double> w) {
  LearnerSpec spec;
  spec.family = Family::saturated;
  auto [ybar, constant] = detail::weighted_mean(y, w);
  FitDiagnostics diag;
  if (constant) {
    diag.degenerate = true;
    diag.note = "constant outcome in stratum";
    return FittedLearner(spec, x.names, ConstantModel{ybar}, diag);
  }
  std::map<std::vector<double>, std::pair<double, double>> acc;
  std::vector<double> key(x.cols() - 1);
  for (Eigen::Index i = 0; i < x.x.rows(); ++i) {
    const auto r = static_cast<std::size_t>(i);
    if (w[r] <= 0) continue;
    for (std::size_t j = 1; j < x.cols(); ++j) key[j - 1] = x.x(i, static_cast<Eigen::Index>(j));
    auto& cell = acc[key];
    cell.first += w[r] * y[r];
    cell.second += w[r];
  }
  SaturatedModel m;
  m.fallback = ybar;
  for (const auto& [k, v] : acc) m.cells.emplace(k, v.first / v.second);
  diag.iterations = static_cast<int>(m.cells.size());
  return FittedLearner(spec, x.names, std::move(m), diag);
}

FittedLearner fit_learner(const LearnerSpec& spec, const DesignMatrix& x,
                          std::span<const double> y, std::span<const double> w,
                          const FitOptions& options) {
  spec.check();
  switch (spec.family) {
    case Family::glm_adjusted: {
      auto f = fit_logistic_glm(x, y, w);
      return FittedLearner(spec, f.names(), f.model(), f.diagnostics());
    }
    case Family::glm_unadjusted: {
      // The intercept-only MLE is the weighted mean.
      auto [ybar, constant] = detail::weighted_mean(y, w);
      FitDiagnostics diag;
      diag.degenerate = constant;
      return FittedLearner(spec, x.names, ConstantModel{ybar}, diag);
    }
    case Family::lasso:
    case Family::ridge:
    case Family::elastic_net:
      return detail::fit_penalized_selected(spec, x, y, w, options);
    case Family::random_forest:
      return fit_random_forest(x, y, w, spec, options);
    case Family::saturated: {
      auto f = fit_saturated(x, y, w);
      return FittedLearner(spec, f.names(), f.model(), f.diagnostics());
    }
  }
  throw ConfigError("unhandled learner family");
}

}  // namespace ltrisk
