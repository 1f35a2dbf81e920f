#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <string>

namespace linshap {

// Multivariate normal feature distribution N(mean, covariance).
//
// Construction validates the distribution: the covariance must be square,
// match the mean length, be symmetric (max |S - S^T| <= 1e-10) and positive
// semi-definite (min eigenvalue >= -1e-8 * largest diagonal entry).
class GaussianSpec {
 public:
  static constexpr double kSymmetryTolerance = 1e-10;
  static constexpr double kPsdRelativeTolerance = 1e-8;

  GaussianSpec(Eigen::VectorXd mean, Eigen::MatrixXd covariance);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(mean_.size()); }
  const Eigen::VectorXd& mean() const noexcept { return mean_; }
  const Eigen::MatrixXd& covariance() const noexcept { return covariance_; }

  // Hex SHA-256 over the dimension (uint64 little-endian) followed by the
  // mean and the row-major covariance as little-endian IEEE-754 doubles.
  std::string fingerprint() const;

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd covariance_;
};

enum class Link { kIdentity, kLogitMargin };

// f(x) = coefficients . x + intercept. For a logit link every quantity in
// this library refers to the margin (log-odds), never the probability.
struct LinearModel {
  Eigen::VectorXd coefficients;
  double intercept = 0.0;
  Link link = Link::kIdentity;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(coefficients.size()); }
  double margin(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

// Throws DimensionMismatch when the model and distribution disagree on N.
void check_dimensions(const LinearModel& model, const GaussianSpec& spec);
void check_length(std::size_t expected, Eigen::Index actual, const char* what);

}  // namespace linshap
