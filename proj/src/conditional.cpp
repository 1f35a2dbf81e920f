#include "linshap/conditional.hpp"

#include <cmath>
#include <string>

#include "linshap/error.hpp"
#include "regression_block.hpp"

namespace linshap {

namespace detail {

namespace {

Eigen::MatrixXd gather(const Eigen::MatrixXd& m, std::span<const std::size_t> rows,
                       std::span<const std::size_t> cols) {
  Eigen::MatrixXd out(rows.size(), cols.size());
  for (std::size_t a = 0; a < rows.size(); ++a) {
    for (std::size_t b = 0; b < cols.size(); ++b) {
      out(a, b) = m(rows[a], cols[b]);
    }
  }
  return out;
}

bool acceptable(const Eigen::LLT<Eigen::MatrixXd>& llt, double condition_cap) {
  if (llt.info() != Eigen::Success) return false;
  const Eigen::VectorXd pivots = llt.matrixLLT().diagonal();
  const double lo = pivots.minCoeff();
  const double hi = pivots.maxCoeff();
  if (!(lo > 0.0)) return false;
  const double ratio = hi / lo;
  return ratio * ratio <= condition_cap;
}

std::string describe(std::span<const std::size_t> known) {
  std::string s = "{";
  for (std::size_t i = 0; i < known.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(known[i]);
  }
  return s + "}";
}

}  // namespace

Eigen::MatrixXd regression_block(const Eigen::MatrixXd& covariance,
                                 std::span<const std::size_t> known,
                                 std::span<const std::size_t> rest, const SolvePolicy& policy,
                                 bool& ridged) {
  ridged = false;
  if (known.empty() || rest.empty()) return Eigen::MatrixXd(rest.size(), known.size());

  Eigen::MatrixXd block = gather(covariance, known, known);
  const Eigen::MatrixXd cross = gather(covariance, known, rest);

  Eigen::LLT<Eigen::MatrixXd> llt(block);
  if (!acceptable(llt, policy.condition_cap)) {
    if (!policy.ridge_fallback) {
      throw SingularSubmatrix("covariance restricted to " + describe(known) +
                              " is singular or ill-conditioned");
    }
    double lambda = 1e-9 * block.trace() / static_cast<double>(known.size());
    // An all-zero block has zero cross-covariance too; any positive ridge
    // yields the same (zero) regression.
    if (!(lambda > 0.0)) lambda = 1e-9;
    block.diagonal().array() += lambda;
    llt.compute(block);
    if (llt.info() != Eigen::Success) {
      throw SingularSubmatrix("ridge-regularized covariance restricted to " + describe(known) +
                              " is still not positive definite");
    }
    ridged = true;
  }
  return llt.solve(cross).transpose();
}

void fill_on_x(Eigen::MatrixXd& on_x, std::span<const std::size_t> known,
               std::span<const std::size_t> rest, const Eigen::MatrixXd& block) {
  on_x.setZero();
  for (std::size_t s : known) on_x(s, s) = 1.0;
  for (std::size_t a = 0; a < rest.size(); ++a) {
    for (std::size_t b = 0; b < known.size(); ++b) on_x(rest[a], known[b]) = block(a, b);
  }
}

void fill_on_mean(Eigen::MatrixXd& on_mean, std::span<const std::size_t> known,
                  std::span<const std::size_t> rest, const Eigen::MatrixXd& block) {
  on_mean.setZero();
  for (std::size_t r : rest) on_mean(r, r) = 1.0;
  for (std::size_t a = 0; a < rest.size(); ++a) {
    for (std::size_t b = 0; b < known.size(); ++b) on_mean(rest[a], known[b]) = -block(a, b);
  }
}

CholeskyChain::CholeskyChain(const Eigen::MatrixXd& covariance, const SolvePolicy& policy)
    : cov_(covariance),
      policy_(policy),
      lower_(Eigen::MatrixXd::Zero(covariance.rows(), covariance.cols())) {
  known_.reserve(static_cast<std::size_t>(covariance.rows()));
}

void CholeskyChain::reset() {
  known_.clear();
  min_pivot_ = 0.0;
  max_pivot_ = 0.0;
}

bool CholeskyChain::push(std::size_t feature) {
  const auto k = static_cast<Eigen::Index>(known_.size());
  Eigen::VectorXd row(k);
  for (Eigen::Index b = 0; b < k; ++b) row(b) = cov_(known_[b], feature);
  if (k > 0) lower_.topLeftCorner(k, k).triangularView<Eigen::Lower>().solveInPlace(row);
  const double d = cov_(feature, feature) - row.squaredNorm();
  if (!(d > 0.0)) return false;
  const double pivot = std::sqrt(d);
  if (k == 0) {
    min_pivot_ = max_pivot_ = pivot;
  } else {
    min_pivot_ = std::min(min_pivot_, pivot);
    max_pivot_ = std::max(max_pivot_, pivot);
  }
  const double ratio = max_pivot_ / min_pivot_;
  if (ratio * ratio > policy_.condition_cap) return false;
  lower_.row(k).head(k) = row.transpose();
  lower_(k, k) = pivot;
  known_.push_back(feature);
  return true;
}

Eigen::MatrixXd CholeskyChain::regression(std::span<const std::size_t> rest) const {
  const auto k = static_cast<Eigen::Index>(known_.size());
  if (k == 0 || rest.empty()) return Eigen::MatrixXd(rest.size(), k);
  Eigen::MatrixXd rhs = gather(cov_, known_, rest);
  const auto l = lower_.topLeftCorner(k, k);
  l.triangularView<Eigen::Lower>().solveInPlace(rhs);
  l.transpose().triangularView<Eigen::Upper>().solveInPlace(rhs);
  return rhs.transpose();
}

}  // namespace detail

ConditionalOperator conditional_operator(const GaussianSpec& spec, const FeatureSubset& known,
                                         const SolvePolicy& policy) {
  const std::size_t n = spec.dim();
  if (known.universe_size() != n) {
    throw DimensionMismatch("subset universe " + std::to_string(known.universe_size()) +
                            " does not match distribution dimension " + std::to_string(n));
  }
  const auto rest = known.complement();
  ConditionalOperator op;
  const Eigen::MatrixXd block = detail::regression_block(spec.covariance(), known.members(),
                                                         rest.members(), policy, op.ridged);
  op.on_x.resize(n, n);
  op.on_mean.resize(n, n);
  detail::fill_on_x(op.on_x, known.members(), rest.members(), block);
  detail::fill_on_mean(op.on_mean, known.members(), rest.members(), block);
  return op;
}

Eigen::VectorXd conditional_expectation(const GaussianSpec& spec,
                                        const Eigen::Ref<const Eigen::VectorXd>& x,
                                        const FeatureSubset& known, const SolvePolicy& policy) {
  check_length(spec.dim(), x.size(), "sample");
  const ConditionalOperator op = conditional_operator(spec, known, policy);
  return op.on_mean * spec.mean() + op.on_x * x;
}

double coalition_value(const LinearModel& model, const GaussianSpec& spec,
                       const Eigen::Ref<const Eigen::VectorXd>& x, const FeatureSubset& known,
                       ValueMode mode, const SolvePolicy& policy) {
  check_dimensions(model, spec);
  check_length(spec.dim(), x.size(), "sample");
  if (mode == ValueMode::kObservational) {
    return model.coefficients.dot(conditional_expectation(spec, x, known, policy)) +
           model.intercept;
  }
  if (known.universe_size() != spec.dim()) {
    throw DimensionMismatch("subset universe does not match distribution dimension");
  }
  Eigen::VectorXd pinned = spec.mean();
  for (std::size_t j : known.members()) pinned(j) = x(j);
  return model.coefficients.dot(pinned) + model.intercept;
}

double shapley_weight(std::size_t subset_size, std::size_t n) {
  if (n == 0 || subset_size >= n) {
    throw InvalidArgument("shapley_weight requires 0 <= |S| <= n - 1, got |S|=" +
                          std::to_string(subset_size) + " n=" + std::to_string(n));
  }
  // 1 / (n * C(n-1, |S|))
  const std::size_t k = std::min(subset_size, n - 1 - subset_size);
  double binom = 1.0;
  for (std::size_t j = 1; j <= k; ++j) {
    binom = binom * static_cast<double>(n - 1 - k + j) / static_cast<double>(j);
  }
  return 1.0 / (static_cast<double>(n) * binom);
}

}  // namespace linshap
