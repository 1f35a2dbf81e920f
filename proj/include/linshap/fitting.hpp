#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "linshap/distribution.hpp"
#include "linshap/gaussian.hpp"

namespace linshap {

// Elastic net minimizes
//   (1/2M) ||y - b - X beta||^2 + penalty * (l1_ratio ||beta||_1 + (1 - l1_ratio)/2 ||beta||^2)
// and L2 logistic regression minimizes
//   -sum_i log-likelihood_i + (penalty / 2) ||beta||^2.
// The intercept is never penalized. With `standardize` the penalty applies to
// coefficients on z-scored columns; returned models are in original units.
struct FitConfig {
  double penalty = 0.0;
  double l1_ratio = 1.0;
  std::size_t max_iterations = 10'000;
  double tolerance = 1e-7;
  bool standardize = false;
  bool record_objective = false;
};

struct FitResult {
  LinearModel model;
  bool converged = false;
  std::size_t iterations = 0;
  // Objective after each sweep (elastic net) or Newton step (logistic), in
  // the working coordinates, when FitConfig::record_objective is set.
  std::vector<double> objective_trace;
};

// Cyclic coordinate descent with soft-thresholding. Uses Gram-matrix updates
// for up to 2000 features and residual updates beyond. Stops when the largest
// coefficient change in a sweep drops below the tolerance.
FitResult fit_elastic_net(const DataMatrix& data, const Eigen::VectorXd& labels,
                          const FitConfig& config);

// Damped Newton with backtracking until the gradient norm is below the
// tolerance. Labels must be 0/1. Throws SeparableData when penalty is 0 and
// an iterate separates the classes perfectly.
FitResult fit_logistic(const DataMatrix& data, const Eigen::VectorXd& labels,
                       const FitConfig& config);

// Penalized logistic objective at `model` in original units; the gradient
// lists the coefficients first and the intercept last.
struct LogisticObjective {
  double value = 0.0;
  Eigen::VectorXd gradient;
};
LogisticObjective logistic_objective(const DataMatrix& data, const Eigen::VectorXd& labels,
                                     double penalty, const LinearModel& model);

// beta . x + b for each row.
Eigen::VectorXd predict_margin(const LinearModel& model, const DataMatrix& data);

inline double soft_threshold(double value, double threshold) {
  if (value > threshold) return value - threshold;
  if (value < -threshold) return value + threshold;
  return 0.0;
}

struct CrossValidationConfig {
  std::size_t folds = 5;
  std::size_t grid_size = 20;
  double grid_low = 1e-4;   // multiples of max_j |cov(x_j, y)|
  double grid_high = 1e1;
  std::uint64_t seed = 0;
};

struct CrossValidationResult {
  FitResult fit;                     // refit on all rows at the selected penalty
  double selected_penalty = 0.0;
  std::vector<double> penalties;     // descending
  std::vector<double> mean_squared_errors;
};

// Selects the elastic-net penalty by K-fold cross-validated squared error over
// a log-spaced grid; `base.l1_ratio` and the remaining settings are kept.
CrossValidationResult cross_validate_elastic_net(const DataMatrix& data,
                                                 const Eigen::VectorXd& labels,
                                                 const FitConfig& base,
                                                 const CrossValidationConfig& cv);

}  // namespace linshap
