#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "linshap/attribution.hpp"
#include "linshap/distribution.hpp"
#include "linshap/fitting.hpp"
#include "linshap/subset.hpp"

namespace linshap {

// Independent 64-bit stream seeds from one base seed (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

struct CorrelationPattern {
  enum class Kind { kIndependent, kPair, kEquicorrelated, kBlock };

  Kind kind = Kind::kIndependent;
  std::size_t dim = 0;
  double rho = 0.0;
  std::size_t first = 0;       // pair only, 0-based
  std::size_t second = 1;
  std::size_t block_size = 1;  // block only; the last block may be shorter

  static CorrelationPattern independent(std::size_t n);
  static CorrelationPattern pair(std::size_t n, double rho, std::size_t i, std::size_t j);
  static CorrelationPattern equicorrelated(std::size_t n, double rho);
  static CorrelationPattern block(std::size_t n, double rho, std::size_t block_size);

  // e.g. "pair(rho=0.8,1,2)"
  std::string describe() const;
};

std::string_view to_string(CorrelationPattern::Kind kind);

// Zero mean, unit variances, correlations per pattern. Throws NotPSD when rho
// is out of range (|rho| >= 1 for a pair, rho <= -1/(n-1) for an
// equicorrelated group) and InvalidArgument for malformed patterns.
GaussianSpec build_covariance(const CorrelationPattern& pattern);

// Rows are mean + F z with F F^T = covariance and z standard normal, drawn row
// by row from mt19937_64(seed). F comes from a pivoted LDL^T so semidefinite
// covariances give exactly constant zero-variance columns; a diagonal jitter of
// 1e-12 * trace / N is tried once if that fails.
DataMatrix sample_mvn(const GaussianSpec& spec, std::size_t count, std::uint64_t seed);

struct SyntheticLabelSpec {
  FeatureSubset causal;
  double noise_std = 0.0;
};

// Noise at `fraction` of the noiseless label's std under `spec`.
SyntheticLabelSpec make_label_spec(const GaussianSpec& spec, FeatureSubset causal,
                                   double fraction = 0.1);

// y = sum of the causal columns + N(0, noise_std^2) noise.
Eigen::VectorXd synthetic_labels(const DataMatrix& data, const SyntheticLabelSpec& labels,
                                 std::uint64_t seed);

// Sample standard deviation (divisor n - 1) of each column; zero for one row.
Eigen::VectorXd column_std(const Eigen::MatrixXd& values);

// ---------------------------------------------------------------- convergence

struct ConvergenceConfig {
  Eigen::VectorXd coefficients = Eigen::Vector3d(1, 2, 3);
  Eigen::VectorXd x = Eigen::Vector3d(1, 1, 1);
  std::vector<CorrelationPattern> patterns = {
      CorrelationPattern::independent(3), CorrelationPattern::pair(3, 0.8, 1, 2),
      CorrelationPattern::equicorrelated(3, 0.8)};
  std::vector<std::uint64_t> permutation_schedule = {1, 4, 16, 64, 256, 1024};
  std::size_t repeats = 20;
  bool antithetic = false;
  std::uint64_t seed = 0;
};

struct ConvergenceSeries {
  CorrelationPattern pattern;
  Eigen::VectorXd exact;  // exact observational attribution
  Eigen::MatrixXd mean;   // rows follow the schedule, columns the features
  Eigen::MatrixXd std;
  // Per feature: std ratio per quadrupling of K from a least-squares fit of
  // log std on log K (2 for exact 1/sqrt(K) scaling; NaN when some std is 0).
  Eigen::VectorXd quadrupling_ratio;
};

struct ConvergenceReport {
  ConvergenceConfig config;
  std::vector<ConvergenceSeries> series;
};

ConvergenceReport run_convergence(const ConvergenceConfig& config);

// ---------------------------------------------------------------- dummy

// Two features, beta = [1, 0], Sigma = [[1, rho], [rho, 1]], mu = 0, x = [1, 1].
struct DummyFeatureReport {
  double rho = 0.0;
  std::uint64_t seed = 0;
  Eigen::VectorXd interventional;
  Eigen::VectorXd observational;              // exact transforms
  Eigen::VectorXd brute_force_observational;  // subset enumeration
};

DummyFeatureReport run_dummy_feature(double rho, std::uint64_t seed = 0);

// ---------------------------------------------------------------- recourse

// Curve values are mean and std over individuals of (margin after imputing
// the top-k features to the mean) - (original margin), for k = 1..k_max.
struct RecourseCurve {
  std::string ranking;  // "interventional", "observational" or "greedy_optimal"
  std::vector<double> mean_delta;
  std::vector<double> std_delta;
};

struct RecourseReport {
  std::size_t k_max = 0;
  std::size_t individuals = 0;
  std::vector<RecourseCurve> curves;  // interventional, observational, greedy_optimal
};

// Ranks each individual's features by signed attribution, largest first, ties
// by ascending index. Observational attributions use exact transforms of `spec`.
RecourseReport run_recourse(const LinearModel& model, const GaussianSpec& spec,
                            const DataMatrix& data, std::size_t k_max = 10,
                            const ExactOptions& exact = {});

// Planted-dummy credit model: ten features, six used by the true logistic
// model; features 6 and 7 are unused but correlated at `rho` with features 0
// and 1; features 8 and 9 are unused noise.
struct RecourseStudyConfig {
  std::size_t individuals = 2000;
  std::size_t k_max = 10;
  double rho = 0.8;
  double penalty_per_sample = 1e-4;  // logistic penalty = this * individuals
  std::uint64_t seed = 0;
};

struct RecourseProblem {
  GaussianSpec truth;
  DataMatrix data;
  Eigen::VectorXd labels;
  LinearModel fitted;
  GaussianSpec estimated;  // empirical moments of data
  bool converged = false;
};

RecourseProblem make_recourse_problem(const RecourseStudyConfig& config);

struct RecourseStudyReport {
  RecourseStudyConfig config;
  LinearModel model;
  bool model_converged = false;
  RecourseReport result;
};

RecourseStudyReport run_recourse_study(const RecourseStudyConfig& config);

// ---------------------------------------------------------------- recovery

struct RecoveryConfig {
  std::size_t features = 60;
  std::size_t causal = 8;
  std::size_t block_size = 4;
  double rho = 0.9;
  std::size_t samples = 500;
  std::size_t explained = 0;  // 0 means every sample
  double noise_fraction = 0.1;
  double elastic_net_l1_ratio = 0.5;
  CrossValidationConfig cv;   // cv.seed is replaced by a stream of `seed`
  std::size_t exact_cap = 20;
  bool force_sampled = false;
  // Explain against the generating N(0, Sigma) instead of the empirical
  // moments of the standardized sample.
  bool generating_moments = false;
  std::uint64_t permutations = 2000;
  bool antithetic = false;
  std::uint64_t seed = 0;
};

struct RecoveryCurve {
  std::string model_kind;  // "lasso" or "elastic_net"
  AttributionMode mode = AttributionMode::kInterventional;
  Eigen::VectorXd importance;          // mean |phi| per feature
  std::vector<std::size_t> ranking;    // most important first, ties by index
  std::vector<std::size_t> recovered;  // causal features among the top r, r = 1..N
  double auc = 0.0;                    // sum_r recovered[r] / (N * |causal|)
};

struct RecoveryReport {
  RecoveryConfig config;
  std::vector<std::size_t> causal;
  double noise_std = 0.0;
  bool observational_sampled = false;
  double lasso_penalty = 0.0;
  double elastic_net_penalty = 0.0;
  Eigen::VectorXd lasso_coefficients;
  Eigen::VectorXd elastic_net_coefficients;
  std::vector<double> random_expectation;  // |causal| * r / N
  double random_auc = 0.0;
  std::vector<RecoveryCurve> curves;  // lasso int/obs, elastic net int/obs

  const RecoveryCurve& curve(const std::string& model_kind, AttributionMode mode) const;
};

// Features are z-scored before fitting and moment estimation.
RecoveryReport run_recovery(const RecoveryConfig& config);

// Helpers shared with tests.
std::vector<std::size_t> rank_descending(const Eigen::VectorXd& scores);
std::vector<std::size_t> recovery_curve(const std::vector<std::size_t>& ranking,
                                        const std::vector<std::size_t>& causal);

}  // namespace linshap
