#include "linshap/distribution.hpp"

#include <cmath>
#include <string>

#include "linshap/error.hpp"

namespace linshap {

void validate_finite(const DataMatrix& data) {
  for (Eigen::Index r = 0; r < data.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.values.cols(); ++c) {
      if (!std::isfinite(data.values(r, c))) {
        throw NonFiniteInput("non-finite value at sample " + std::to_string(r) + ", feature " +
                             std::to_string(c));
      }
    }
  }
  if (!data.column_names.empty() && data.column_names.size() != data.cols()) {
    throw DimensionMismatch("column name count does not match column count");
  }
}

GaussianSpec empirical_moments(const DataMatrix& data) {
  if (data.rows() < 2) {
    throw TooFewSamples("covariance estimation needs at least 2 samples, got " +
                        std::to_string(data.rows()));
  }
  validate_finite(data);
  const Eigen::VectorXd mean = data.values.colwise().mean().transpose();
  const Eigen::MatrixXd centered = data.values.rowwise() - mean.transpose();
  Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(data.rows() - 1);
  // The product is symmetric up to rounding; make it exactly so.
  cov = (0.5 * (cov + cov.transpose())).eval();
  return GaussianSpec(mean, std::move(cov));
}

GaussianSpec shrink(const GaussianSpec& spec, const ShrinkageConfig& config) {
  if (!(config.intensity >= 0.0 && config.intensity <= 1.0)) {
    throw InvalidArgument("shrinkage intensity must lie in [0, 1]");
  }
  const Eigen::MatrixXd& cov = spec.covariance();
  const auto n = static_cast<Eigen::Index>(spec.dim());
  Eigen::MatrixXd target;
  switch (config.target) {
    case ShrinkageTarget::kDiagonalOfSample:
      target = cov.diagonal().asDiagonal();
      break;
    case ShrinkageTarget::kScaledIdentity:
      target = Eigen::MatrixXd::Identity(n, n) * (n > 0 ? cov.trace() / static_cast<double>(n) : 0.0);
      break;
  }
  if (config.intensity == 0.0) return spec;
  return GaussianSpec(spec.mean(), (1.0 - config.intensity) * cov + config.intensity * target);
}

Standardization Standardization::fit(const DataMatrix& data) {
  if (data.rows() < 2) throw TooFewSamples("standardization needs at least 2 samples");
  validate_finite(data);
  Standardization s;
  s.center = data.values.colwise().mean().transpose();
  const Eigen::MatrixXd centered = data.values.rowwise() - s.center.transpose();
  s.scale = (centered.colwise().squaredNorm() / static_cast<double>(data.rows() - 1))
                .cwiseSqrt()
                .transpose();
  for (Eigen::Index j = 0; j < s.scale.size(); ++j) {
    if (!(s.scale(j) > 0.0)) s.scale(j) = 1.0;
  }
  return s;
}

Eigen::MatrixXd Standardization::apply(const Eigen::MatrixXd& values) const {
  if (values.cols() != center.size()) {
    throw DimensionMismatch("standardization fitted on " + std::to_string(center.size()) +
                            " columns, applied to " + std::to_string(values.cols()));
  }
  return (values.rowwise() - center.transpose()).array().rowwise() / scale.transpose().array();
}

}  // namespace linshap
