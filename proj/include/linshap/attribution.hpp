#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <string_view>

#include "linshap/conditional.hpp"
#include "linshap/gaussian.hpp"
#include "linshap/transforms.hpp"

namespace linshap {

enum class AttributionMode { kInterventional, kObservationalExact, kObservationalSampled };

std::string_view to_string(AttributionMode mode);

// Transform tensor contracted with one model's coefficients:
// row i of mean_part is beta * mean_transform[i], row i of x_part is
// beta * x_transform[i], so phi = mean_part * mu + x_part * x.
struct AttributionOperator {
  Eigen::MatrixXd mean_part;
  Eigen::MatrixXd x_part;
  Eigen::VectorXd mean;
  double base_value = 0.0;  // beta . mu + b
  AttributionMode mode = AttributionMode::kObservationalExact;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(x_part.rows()); }
};

// Attribution of one explained sample.
struct Attribution {
  Eigen::VectorXd values;
  double base_value = 0.0;
  AttributionMode mode = AttributionMode::kInterventional;
};

// Attributions of a batch: row r of `values` explains row r of the input.
struct AttributionBatch {
  Eigen::MatrixXd values;
  double base_value = 0.0;
  AttributionMode mode = AttributionMode::kInterventional;
};

// The tensor must have been built for `spec` (checked by fingerprint).
AttributionOperator contract(const TransformTensor& tensor, const LinearModel& model,
                             const GaussianSpec& spec);

Attribution attribute_observational(const AttributionOperator& op,
                                    const Eigen::Ref<const Eigen::VectorXd>& x);
// Rows of `samples` are explained independently.
AttributionBatch attribute_observational_batch(const AttributionOperator& op,
                                               const Eigen::MatrixXd& samples);

// phi_i = beta_i (x_i - mu_i)
Attribution attribute_interventional(const LinearModel& model, const Eigen::VectorXd& mean,
                                     const Eigen::Ref<const Eigen::VectorXd>& x);
AttributionBatch attribute_interventional_batch(const LinearModel& model,
                                                const Eigen::VectorXd& mean,
                                                const Eigen::MatrixXd& samples);

// Reference implementation: weighted sum over all subsets of
// v(S + i) - v(S), with v from coalition_value. Limited to 12 features.
inline constexpr std::size_t kBruteForceCap = 12;
Attribution brute_force_shapley(const LinearModel& model, const GaussianSpec& spec,
                                const Eigen::Ref<const Eigen::VectorXd>& x, ValueMode mode,
                                const SolvePolicy& policy = {});

}  // namespace linshap
