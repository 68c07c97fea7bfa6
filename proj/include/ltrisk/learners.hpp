#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "ltrisk/data_model.hpp"

namespace ltrisk {

/// Predictions are clamped to [kProbFloor, 1 - kProbFloor], except for the
/// saturated family, which returns exact cell means.
inline constexpr double kProbFloor = 1e-6;

/// Intercept in column 0 followed by the expanded predictors. Categorical
/// nodes become reference-coded indicators named "<column>=<level>".
struct DesignMatrix {
  Eigen::MatrixXd x;
  std::vector<std::string> names;

  std::size_t rows() const { return static_cast<std::size_t>(x.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(x.cols()); }
};

DesignMatrix build_design(const ObservedDataset& data, std::span<const std::size_t> columns,
                          std::span<const std::size_t> rows);
/// Intercept-only design with n rows.
DesignMatrix intercept_design(std::size_t n);

enum class Family {
  glm_adjusted,
  glm_unadjusted,  // intercept only
  lasso,
  ridge,
  elastic_net,
  random_forest,
  saturated,  // cell means over the distinct predictor patterns
};

enum class LambdaSelection { cv_min, undersmoothed };

std::string_view to_string(Family f);
Family family_from_string(std::string_view s);
std::string_view to_string(LambdaSelection s);
LambdaSelection lambda_selection_from_string(std::string_view s);

struct LearnerSpec {
  Family family = Family::glm_adjusted;
  LambdaSelection lambda_selection = LambdaSelection::cv_min;
  /// Elastic-net mixing; lasso and ridge override it with 1 and 0.
  double alpha = 0.5;
  int folds = 10;
  int path_size = 100;
  double path_ratio = 1e-4;
  int trees = 100;
  int min_leaf = 10;
  int mtry = 0;  // 0 means ceil(sqrt(p))

  bool penalized() const {
    return family == Family::lasso || family == Family::ridge || family == Family::elastic_net;
  }
  double effective_alpha() const {
    if (family == Family::lasso) return 1.0;
    if (family == Family::ridge) return 0.0;
    return alpha;
  }
  /// Short label, e.g. "ridge/undersmoothed".
  std::string label() const;
  void check() const;
};

struct FitDiagnostics {
  int iterations = 0;
  bool converged = true;
  bool degenerate = false;
  double objective = 0.0;
  double gradient_max = 0.0;  // unpenalized fits, raw weight scale
  double kkt_residual = 0.0;  // penalized fits, normalized weight scale
  double lambda = 0.0;
  std::string note;
};

struct ConstantModel {
  double p = 0.5;
};

/// Logistic coefficients on the original (unstandardized) scale.
struct GlmModel {
  std::vector<std::size_t> used;  // design columns with a coefficient (0 is the intercept)
  Eigen::VectorXd beta;
};

struct SaturatedModel {
  std::map<std::vector<double>, double> cells;
  double fallback = 0.5;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct ForestModel {
  std::vector<std::vector<TreeNode>> trees;
};

using LearnerModel = std::variant<ConstantModel, GlmModel, SaturatedModel, ForestModel>;

/// Trained conditional-probability model; immutable and safe to share.
class FittedLearner {
 public:
  FittedLearner(LearnerSpec spec, std::vector<std::string> names, LearnerModel model,
                FitDiagnostics diagnostics);

  /// Probabilities for the rows of x; x must carry the training columns.
  std::vector<double> predict(const DesignMatrix& x) const;

  const LearnerSpec& spec() const { return spec_; }
  const std::vector<std::string>& names() const { return names_; }
  const LearnerModel& model() const { return model_; }
  const FitDiagnostics& diagnostics() const { return diag_; }

  /// Full-length coefficient vector (zeros for dropped columns) for GLM-type
  /// models; empty otherwise.
  Eigen::VectorXd coefficients() const;

 private:
  LearnerSpec spec_;
  std::vector<std::string> names_;
  LearnerModel model_;
  FitDiagnostics diag_;
};

struct FitOptions {
  std::uint64_t seed = 0;
  /// Stable per-row keys (subject indices) for fold assignment and forest
  /// resampling; row position is used when empty.
  std::span<const std::uint64_t> keys = {};
};

FittedLearner fit_learner(const LearnerSpec& spec, const DesignMatrix& x,
                          std::span<const double> y, std::span<const double> w,
                          const FitOptions& options = {});

/// Weighted quasi-binomial maximum likelihood by IRLS.
FittedLearner fit_logistic_glm(const DesignMatrix& x, std::span<const double> y,
                               std::span<const double> w);

/// Coordinate descent for the elastic-net penalized weighted logistic
/// objective  -sum w_i l_i / sum w + lambda (alpha |b|_1 + (1 - alpha)/2 |b|_2^2)
/// on internally standardized columns, intercept unpenalized.
FittedLearner fit_penalized_logistic(const DesignMatrix& x, std::span<const double> y,
                                     std::span<const double> w, double alpha, double lambda);

/// Smallest lambda for which every penalized coefficient is zero
/// (alpha below 1e-3 is treated as 1e-3, as is usual for ridge paths).
double lambda_max(const DesignMatrix& x, std::span<const double> y, std::span<const double> w,
                  double alpha);
/// Geometric path from lmax down to lmax * ratio.
std::vector<double> lambda_path(double lmax, int size, double ratio);

struct CvResult {
  std::vector<double> path;
  std::vector<double> cv_deviance;
  std::size_t index = 0;
  double lambda = 0.0;
  int degenerate_folds = 0;
};

CvResult select_lambda_cv(const DesignMatrix& x, std::span<const double> y,
                          std::span<const double> w, double alpha, const LearnerSpec& spec,
                          const FitOptions& options);
double select_lambda_undersmoothed(std::span<const double> path);

FittedLearner fit_random_forest(const DesignMatrix& x, std::span<const double> y,
                                std::span<const double> w, const LearnerSpec& spec,
                                const FitOptions& options);

FittedLearner fit_saturated(const DesignMatrix& x, std::span<const double> y,
                            std::span<const double> w);

std::vector<double> predict_probability(const FittedLearner& learner, const DesignMatrix& x);

inline double clamp_probability(double p) {
  return p < kProbFloor ? kProbFloor : (p > 1.0 - kProbFloor ? 1.0 - kProbFloor : p);
}
double expit(double eta);
double logit(double p);

namespace detail {
/// Columns that are neither constant nor exact duplicates of an earlier
/// column among rows with positive weight. Column 0 (intercept) is kept.
std::vector<std::size_t> informative_columns(const Eigen::MatrixXd& x, std::span<const double> w);
/// Weighted mean of y over positive-weight rows, and whether y is constant there.
std::pair<double, bool> weighted_mean(std::span<const double> y, std::span<const double> w);
/// Penalized fit with lambda chosen per spec.lambda_selection.
FittedLearner fit_penalized_selected(const LearnerSpec& spec, const DesignMatrix& x,
                                     std::span<const double> y, std::span<const double> w,
                                     const FitOptions& options);
}  // namespace detail

}  // namespace ltrisk
