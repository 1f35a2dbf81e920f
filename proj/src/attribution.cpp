#include "linshap/attribution.hpp"

#include <bit>
#include <string>
#include <vector>

#include "linshap/error.hpp"

namespace linshap {

std::string_view to_string(AttributionMode mode) {
  switch (mode) {
    case AttributionMode::kInterventional:
      return "interventional";
    case AttributionMode::kObservationalExact:
      return "observational_exact";
    case AttributionMode::kObservationalSampled:
      return "observational_sampled";
  }
  return "unknown";
}

AttributionOperator contract(const TransformTensor& tensor, const LinearModel& model,
                             const GaussianSpec& spec) {
  check_dimensions(model, spec);
  const std::size_t n = spec.dim();
  if (tensor.dim() != n || tensor.mean_transform.size() != n) {
    throw DimensionMismatch("tensor has " + std::to_string(tensor.dim()) +
                            " features, model has " + std::to_string(n));
  }
  if (!tensor.distribution_fingerprint.empty() &&
      tensor.distribution_fingerprint != spec.fingerprint()) {
    throw FingerprintMismatch("tensor was built for a different distribution");
  }
  AttributionOperator op;
  op.mean_part.resize(n, n);
  op.x_part.resize(n, n);
  const Eigen::RowVectorXd beta = model.coefficients.transpose();
  for (std::size_t i = 0; i < n; ++i) {
    op.mean_part.row(i) = beta * tensor.mean_transform[i];
    op.x_part.row(i) = beta * tensor.x_transform[i];
  }
  op.mean = spec.mean();
  op.base_value = model.coefficients.dot(spec.mean()) + model.intercept;
  op.mode = tensor.mode == TransformMode::kExact ? AttributionMode::kObservationalExact
                                                 : AttributionMode::kObservationalSampled;
  return op;
}

Attribution attribute_observational(const AttributionOperator& op,
                                    const Eigen::Ref<const Eigen::VectorXd>& x) {
  check_length(op.dim(), x.size(), "sample");
  Attribution a;
  a.values = op.mean_part * op.mean + op.x_part * x;
  a.base_value = op.base_value;
  a.mode = op.mode;
  return a;
}

AttributionBatch attribute_observational_batch(const AttributionOperator& op,
                                               const Eigen::MatrixXd& samples) {
  check_length(op.dim(), samples.cols(), "sample row");
  const Eigen::VectorXd offset = op.mean_part * op.mean;
  AttributionBatch batch;
  batch.values.resize(samples.rows(), samples.cols());
  // Row-by-row so every row matches the single-sample path bit for bit.
  for (Eigen::Index r = 0; r < samples.rows(); ++r) {
    const Eigen::VectorXd x = samples.row(r).transpose();
    batch.values.row(r) = (offset + op.x_part * x).transpose();
  }
  batch.base_value = op.base_value;
  batch.mode = op.mode;
  return batch;
}

Attribution attribute_interventional(const LinearModel& model, const Eigen::VectorXd& mean,
                                     const Eigen::Ref<const Eigen::VectorXd>& x) {
  check_length(model.dim(), mean.size(), "mean");
  check_length(model.dim(), x.size(), "sample");
  Attribution a;
  a.values = model.coefficients.cwiseProduct(x - mean);
  a.base_value = model.coefficients.dot(mean) + model.intercept;
  a.mode = AttributionMode::kInterventional;
  return a;
}

AttributionBatch attribute_interventional_batch(const LinearModel& model,
                                                const Eigen::VectorXd& mean,
                                                const Eigen::MatrixXd& samples) {
  check_length(model.dim(), mean.size(), "mean");
  check_length(model.dim(), samples.cols(), "sample row");
  AttributionBatch batch;
  batch.values =
      (samples.rowwise() - mean.transpose()).array().rowwise() * model.coefficients.transpose().array();
  batch.base_value = model.coefficients.dot(mean) + model.intercept;
  batch.mode = AttributionMode::kInterventional;
  return batch;
}

Attribution brute_force_shapley(const LinearModel& model, const GaussianSpec& spec,
                                const Eigen::Ref<const Eigen::VectorXd>& x, ValueMode mode,
                                const SolvePolicy& policy) {
  check_dimensions(model, spec);
  check_length(spec.dim(), x.size(), "sample");
  const std::size_t n = spec.dim();
  if (n > kBruteForceCap) {
    throw CapExceeded("brute-force Shapley supports at most " + std::to_string(kBruteForceCap) +
                      " features, got " + std::to_string(n));
  }
  const std::uint64_t subsets = std::uint64_t{1} << n;
  std::vector<double> value(subsets);
  for (std::uint64_t mask = 0; mask < subsets; ++mask) {
    value[mask] = coalition_value(model, spec, x, FeatureSubset::from_mask(n, mask), mode, policy);
  }

  Attribution a;
  a.values = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t bit = std::uint64_t{1} << i;
    for (std::uint64_t mask = 0; mask < subsets; ++mask) {
      if (mask & bit) continue;
      const auto size = static_cast<std::size_t>(std::popcount(mask));
      a.values(i) += shapley_weight(size, n) * (value[mask | bit] - value[mask]);
    }
  }
  a.base_value = model.coefficients.dot(spec.mean()) + model.intercept;
  a.mode = mode == ValueMode::kInterventional ? AttributionMode::kInterventional
                                              : AttributionMode::kObservationalExact;
  return a;
}

}  // namespace linshap
