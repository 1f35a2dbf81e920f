#pragma once

// Internal helpers shared by the conditioning code and the transform
// accumulators.

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

#include "linshap/conditional.hpp"

namespace linshap::detail {

// Sigma_{rest, known} * Sigma_{known, known}^{-1} (|rest| x |known|).
// Sets `ridged` when the ridge fallback was needed.
Eigen::MatrixXd regression_block(const Eigen::MatrixXd& covariance,
                                 std::span<const std::size_t> known,
                                 std::span<const std::size_t> rest, const SolvePolicy& policy,
                                 bool& ridged);

// Writes Q_S + U_S into on_x (N x N, overwritten).
void fill_on_x(Eigen::MatrixXd& on_x, std::span<const std::size_t> known,
               std::span<const std::size_t> rest, const Eigen::MatrixXd& block);

// Writes Q_{S^c} - U_S into on_mean (N x N, overwritten).
void fill_on_mean(Eigen::MatrixXd& on_mean, std::span<const std::size_t> known,
                  std::span<const std::size_t> rest, const Eigen::MatrixXd& block);

// Cholesky factor of Sigma_SS grown one feature at a time, following the
// prefix chain of a permutation. The known set is kept in insertion order.
class CholeskyChain {
 public:
  CholeskyChain(const Eigen::MatrixXd& covariance, const SolvePolicy& policy);

  // Appends `feature` to the known set. Returns false when the plain
  // factorization breaks down or exceeds the condition cap; the chain is then
  // unusable until reset().
  bool push(std::size_t feature);
  void reset();

  const std::vector<std::size_t>& known() const noexcept { return known_; }

  // Sigma_{rest, known} Sigma_{known, known}^{-1}, columns in insertion order.
  Eigen::MatrixXd regression(std::span<const std::size_t> rest) const;

 private:
  const Eigen::MatrixXd& cov_;
  SolvePolicy policy_;
  Eigen::MatrixXd lower_;
  std::vector<std::size_t> known_;
  double min_pivot_ = 0.0;
  double max_pivot_ = 0.0;
};

}  // namespace linshap::detail
