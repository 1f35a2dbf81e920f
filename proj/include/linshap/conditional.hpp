#pragma once

#include <Eigen/Dense>
#include <cstddef>

#include "linshap/gaussian.hpp"
#include "linshap/subset.hpp"

namespace linshap {

// How covariance blocks Sigma_SS are inverted when conditioning on S.
//
// A block is solved by Cholesky. If that factorization breaks down, or its
// condition estimate (max L_jj / min L_jj)^2 exceeds `condition_cap`, the
// block is re-factored as Sigma_SS + lambda I with
// lambda = 1e-9 * trace(Sigma_SS) / |S| when `ridge_fallback` is set, and
// SingularSubmatrix is thrown otherwise.
struct SolvePolicy {
  bool ridge_fallback = true;
  double condition_cap = 1e12;
};

// Affine map x -> on_mean * mu + on_x * x giving E[x | x_S] for N(mu, Sigma).
//
//   on_x    = Q_S + U_S
//   on_mean = Q_{S^c} - U_S
//   U_S     = rows S^c, columns S filled with Sigma_{S^c S} Sigma_SS^{-1}
struct ConditionalOperator {
  Eigen::MatrixXd on_mean;
  Eigen::MatrixXd on_x;
  bool ridged = false;
};

ConditionalOperator conditional_operator(const GaussianSpec& spec, const FeatureSubset& known,
                                         const SolvePolicy& policy = {});

// E[x | x_S = x_S] as a full length-N vector: known coordinates are copied
// from x, unknown ones get the Gaussian conditional mean. S = {} returns the
// mean and S = all features returns x.
Eigen::VectorXd conditional_expectation(const GaussianSpec& spec,
                                        const Eigen::Ref<const Eigen::VectorXd>& x,
                                        const FeatureSubset& known,
                                        const SolvePolicy& policy = {});

enum class ValueMode { kObservational, kInterventional };

// v(S): the expected model output given the features in S.
// Observational conditions on x_S under the Gaussian; interventional pins the
// unknown features to their means independently of x_S.
double coalition_value(const LinearModel& model, const GaussianSpec& spec,
                       const Eigen::Ref<const Eigen::VectorXd>& x, const FeatureSubset& known,
                       ValueMode mode, const SolvePolicy& policy = {});

// |S|! (n - 1 - |S|)! / n!
double shapley_weight(std::size_t subset_size, std::size_t n);

}  // namespace linshap
