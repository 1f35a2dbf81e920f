#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <string>
#include <vector>

#include "linshap/gaussian.hpp"

namespace linshap {

// Samples in rows, features in columns.
struct DataMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> column_names;  // empty or one per column

  std::size_t rows() const noexcept { return static_cast<std::size_t>(values.rows()); }
  std::size_t cols() const noexcept { return static_cast<std::size_t>(values.cols()); }
};

// Throws NonFiniteInput naming the first offending cell.
void validate_finite(const DataMatrix& data);

// Column means and the unbiased (M - 1) sample covariance.
GaussianSpec empirical_moments(const DataMatrix& data);

enum class ShrinkageTarget { kDiagonalOfSample, kScaledIdentity };

struct ShrinkageConfig {
  double intensity = 0.0;  // in [0, 1]
  ShrinkageTarget target = ShrinkageTarget::kDiagonalOfSample;
};

// Sigma' = (1 - intensity) Sigma + intensity * target; the mean is unchanged.
GaussianSpec shrink(const GaussianSpec& spec, const ShrinkageConfig& config);

// Per-column z-score parameters. Zero-variance columns keep scale 1.
struct Standardization {
  Eigen::VectorXd center;
  Eigen::VectorXd scale;

  static Standardization fit(const DataMatrix& data);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& values) const;
};

}  // namespace linshap
