#include "linshap/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "linshap/error.hpp"
#include "linshap/transforms.hpp"

namespace linshap {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

CorrelationPattern CorrelationPattern::independent(std::size_t n) {
  CorrelationPattern p;
  p.dim = n;
  return p;
}

CorrelationPattern CorrelationPattern::pair(std::size_t n, double rho, std::size_t i,
                                            std::size_t j) {
  CorrelationPattern p;
  p.kind = Kind::kPair;
  p.dim = n;
  p.rho = rho;
  p.first = i;
  p.second = j;
  return p;
}

CorrelationPattern CorrelationPattern::equicorrelated(std::size_t n, double rho) {
  CorrelationPattern p;
  p.kind = Kind::kEquicorrelated;
  p.dim = n;
  p.rho = rho;
  return p;
}

CorrelationPattern CorrelationPattern::block(std::size_t n, double rho, std::size_t block_size) {
  CorrelationPattern p;
  p.kind = Kind::kBlock;
  p.dim = n;
  p.rho = rho;
  p.block_size = block_size;
  return p;
}

std::string_view to_string(CorrelationPattern::Kind kind) {
  switch (kind) {
    case CorrelationPattern::Kind::kIndependent:
      return "independent";
    case CorrelationPattern::Kind::kPair:
      return "pair";
    case CorrelationPattern::Kind::kEquicorrelated:
      return "equicorrelated";
    case CorrelationPattern::Kind::kBlock:
      return "block";
  }
  return "unknown";
}

std::string CorrelationPattern::describe() const {
  std::ostringstream out;
  out << to_string(kind) << "(n=" << dim;
  if (kind != Kind::kIndependent) out << ",rho=" << rho;
  if (kind == Kind::kPair) out << "," << first << "," << second;
  if (kind == Kind::kBlock) out << ",size=" << block_size;
  out << ")";
  return out.str();
}

namespace {

void check_group_rho(double rho, std::size_t group) {
  if (!std::isfinite(rho) || rho > 1.0) throw NotPSD("correlation must be finite and <= 1");
  if (group >= 2 && !(rho > -1.0 / static_cast<double>(group - 1))) {
    throw NotPSD("correlation " + std::to_string(rho) + " is below -1/(" +
                 std::to_string(group) + " - 1)");
  }
}

}  // namespace

GaussianSpec build_covariance(const CorrelationPattern& pattern) {
  const auto n = static_cast<Eigen::Index>(pattern.dim);
  if (n == 0) throw InvalidArgument("pattern dimension must be positive");
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(n, n);
  switch (pattern.kind) {
    case CorrelationPattern::Kind::kIndependent:
      break;
    case CorrelationPattern::Kind::kPair: {
      if (pattern.first >= pattern.dim || pattern.second >= pattern.dim ||
          pattern.first == pattern.second) {
        throw InvalidArgument("pair indices must be distinct features");
      }
      if (!(std::abs(pattern.rho) < 1.0)) throw NotPSD("pair correlation needs |rho| < 1");
      const auto i = static_cast<Eigen::Index>(pattern.first);
      const auto j = static_cast<Eigen::Index>(pattern.second);
      sigma(i, j) = sigma(j, i) = pattern.rho;
      break;
    }
    case CorrelationPattern::Kind::kEquicorrelated:
      check_group_rho(pattern.rho, pattern.dim);
      sigma.setConstant(pattern.rho);
      sigma.diagonal().setOnes();
      break;
    case CorrelationPattern::Kind::kBlock: {
      if (pattern.block_size == 0) throw InvalidArgument("block size must be positive");
      check_group_rho(pattern.rho, std::min(pattern.block_size, pattern.dim));
      for (std::size_t start = 0; start < pattern.dim; start += pattern.block_size) {
        const auto s = static_cast<Eigen::Index>(start);
        const auto len = static_cast<Eigen::Index>(std::min(pattern.block_size, pattern.dim - start));
        sigma.block(s, s, len, len).setConstant(pattern.rho);
      }
      sigma.diagonal().setOnes();
      break;
    }
  }
  return GaussianSpec(Eigen::VectorXd::Zero(n), std::move(sigma));
}

namespace {

// F with F F^T = cov, or an empty matrix if the factorization is unusable.
Eigen::MatrixXd sampling_factor(const Eigen::MatrixXd& cov) {
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
  if (ldlt.info() != Eigen::Success) return {};
  Eigen::VectorXd d = ldlt.vectorD();
  const double scale = std::max(1.0, cov.diagonal().cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (!std::isfinite(d(i)) || d(i) < -1e-10 * scale) return {};
    d(i) = std::max(d(i), 0.0);
  }
  Eigen::MatrixXd l = ldlt.matrixL();
  l = l * d.cwiseSqrt().asDiagonal();
  return ldlt.transpositionsP().transpose() * l;
}

}  // namespace

DataMatrix sample_mvn(const GaussianSpec& spec, std::size_t count, std::uint64_t seed) {
  const auto n = static_cast<Eigen::Index>(spec.dim());
  Eigen::MatrixXd factor = sampling_factor(spec.covariance());
  if (factor.size() == 0) {
    Eigen::MatrixXd jittered = spec.covariance();
    jittered.diagonal().array() += 1e-12 * spec.covariance().trace() / static_cast<double>(n);
    factor = sampling_factor(jittered);
    if (factor.size() == 0) throw FactorizationFailed("covariance could not be factored for sampling");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  DataMatrix out;
  out.values.resize(static_cast<Eigen::Index>(count), n);
  Eigen::VectorXd z(n);
  for (Eigen::Index r = 0; r < out.values.rows(); ++r) {
    for (Eigen::Index j = 0; j < n; ++j) z(j) = normal(rng);
    out.values.row(r) = (spec.mean() + factor * z).transpose();
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    if (spec.covariance()(j, j) == 0.0) out.values.col(j).setConstant(spec.mean()(j));
  }
  return out;
}

SyntheticLabelSpec make_label_spec(const GaussianSpec& spec, FeatureSubset causal,
                                   double fraction) {
  if (causal.universe_size() != spec.dim()) throw DimensionMismatch("causal set universe");
  if (!(fraction >= 0.0)) throw InvalidArgument("noise fraction must be >= 0");
  double var = 0.0;
  for (std::size_t i : causal.members())
    for (std::size_t j : causal.members())
      var += spec.covariance()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  SyntheticLabelSpec out{std::move(causal), fraction * std::sqrt(std::max(var, 0.0))};
  return out;
}

Eigen::VectorXd synthetic_labels(const DataMatrix& data, const SyntheticLabelSpec& labels,
                                 std::uint64_t seed) {
  if (labels.causal.universe_size() != data.cols()) throw DimensionMismatch("causal set universe");
  if (!(labels.noise_std >= 0.0)) throw InvalidArgument("noise std must be >= 0");
  Eigen::VectorXd y = Eigen::VectorXd::Zero(data.values.rows());
  for (std::size_t j : labels.causal.members()) y += data.values.col(static_cast<Eigen::Index>(j));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += labels.noise_std * normal(rng);
  return y;
}

Eigen::VectorXd column_std(const Eigen::MatrixXd& values) {
  const Eigen::Index m = values.rows();
  if (m < 2) return Eigen::VectorXd::Zero(values.cols());
  const Eigen::MatrixXd centered = values.rowwise() - values.colwise().mean();
  return (centered.colwise().squaredNorm() / static_cast<double>(m - 1)).cwiseSqrt().transpose();
}

// ---------------------------------------------------------------- convergence

namespace {

double quadrupling_ratio(const std::vector<std::uint64_t>& schedule, const Eigen::VectorXd& std) {
  if (schedule.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    const double s = std(static_cast<Eigen::Index>(k));
    if (!(s > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    lx.push_back(std::log(static_cast<double>(schedule[k])));
    ly.push_back(std::log(s));
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(lx.size());
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(ly.size());
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    sxy += (lx[k] - mx) * (ly[k] - my);
    sxx += (lx[k] - mx) * (lx[k] - mx);
  }
  return std::exp(-sxy / sxx * std::log(4.0));
}

}  // namespace

ConvergenceReport run_convergence(const ConvergenceConfig& config) {
  if (config.repeats < 2) throw InvalidArgument("convergence needs at least 2 repeats");
  if (config.permutation_schedule.empty()) throw InvalidArgument("empty permutation schedule");
  for (std::size_t k = 0; k < config.permutation_schedule.size(); ++k) {
    if (config.permutation_schedule[k] == 0 ||
        (k > 0 && config.permutation_schedule[k] <= config.permutation_schedule[k - 1])) {
      throw InvalidArgument("permutation schedule must be positive and strictly increasing");
    }
  }
  check_length(static_cast<std::size_t>(config.coefficients.size()), config.x.size(), "x");
  const LinearModel model{config.coefficients, 0.0, Link::kIdentity};

  ConvergenceReport report;
  report.config = config;
  for (std::size_t p = 0; p < config.patterns.size(); ++p) {
    const GaussianSpec spec = build_covariance(config.patterns[p]);
    check_dimensions(model, spec);
    const auto n = static_cast<Eigen::Index>(spec.dim());
    const auto steps = static_cast<Eigen::Index>(config.permutation_schedule.size());
    ConvergenceSeries series;
    series.pattern = config.patterns[p];
    series.exact =
        attribute_observational(contract(exact_transforms(spec), model, spec), config.x).values;
    series.mean.resize(steps, n);
    series.std.resize(steps, n);
    for (Eigen::Index k = 0; k < steps; ++k) {
      Eigen::MatrixXd draws(static_cast<Eigen::Index>(config.repeats), n);
      for (std::size_t r = 0; r < config.repeats; ++r) {
        SampledOptions opts;
        opts.permutations = config.permutation_schedule[static_cast<std::size_t>(k)];
        opts.antithetic = config.antithetic;
        opts.seed = derive_seed(derive_seed(derive_seed(config.seed, p), static_cast<std::uint64_t>(k)), r);
        const auto op = contract(sampled_transforms(spec, opts), model, spec);
        draws.row(static_cast<Eigen::Index>(r)) = attribute_observational(op, config.x).values.transpose();
      }
      series.mean.row(k) = draws.colwise().mean();
      series.std.row(k) = column_std(draws).transpose();
    }
    series.quadrupling_ratio.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      series.quadrupling_ratio(i) = quadrupling_ratio(config.permutation_schedule, series.std.col(i));
    }
    report.series.push_back(std::move(series));
  }
  return report;
}

// ---------------------------------------------------------------- dummy

DummyFeatureReport run_dummy_feature(double rho, std::uint64_t seed) {
  if (!(rho > -1.0 && rho < 1.0)) throw InvalidArgument("rho must lie in (-1, 1)");
  const GaussianSpec spec = build_covariance(CorrelationPattern::pair(2, rho, 0, 1));
  const LinearModel model{Eigen::Vector2d(1, 0), 0.0, Link::kIdentity};
  const Eigen::Vector2d x(1, 1);
  DummyFeatureReport report;
  report.rho = rho;
  report.seed = seed;
  report.interventional = attribute_interventional(model, spec.mean(), x).values;
  report.observational =
      attribute_observational(contract(exact_transforms(spec), model, spec), x).values;
  report.brute_force_observational =
      brute_force_shapley(model, spec, x, ValueMode::kObservational).values;
  return report;
}

// ---------------------------------------------------------------- recourse

namespace {

// Mean-imputes the top-k features of `order` for k = 1..k_max and records the
// margin change for each k.
void accumulate_imputation(const LinearModel& model, const Eigen::VectorXd& mean,
                           const Eigen::VectorXd& x, const std::vector<std::size_t>& order,
                           std::size_t k_max, Eigen::Ref<Eigen::VectorXd> deltas) {
  const double before = model.margin(x);
  Eigen::VectorXd imputed = x;
  for (std::size_t k = 0; k < k_max; ++k) {
    const auto j = static_cast<Eigen::Index>(order[k]);
    imputed(j) = mean(j);
    deltas(static_cast<Eigen::Index>(k)) = model.margin(imputed) - before;
  }
}

RecourseCurve summarize(std::string name, const Eigen::MatrixXd& deltas) {
  RecourseCurve c;
  c.ranking = std::move(name);
  const Eigen::VectorXd mean = deltas.colwise().mean().transpose();
  const Eigen::VectorXd std = column_std(deltas);
  c.mean_delta.assign(mean.data(), mean.data() + mean.size());
  c.std_delta.assign(std.data(), std.data() + std.size());
  return c;
}

}  // namespace

std::vector<std::size_t> rank_descending(const Eigen::VectorXd& scores) {
  std::vector<std::size_t> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores(static_cast<Eigen::Index>(a)) > scores(static_cast<Eigen::Index>(b));
  });
  return order;
}

RecourseReport run_recourse(const LinearModel& model, const GaussianSpec& spec,
                            const DataMatrix& data, std::size_t k_max,
                            const ExactOptions& exact) {
  check_dimensions(model, spec);
  check_length(spec.dim(), static_cast<Eigen::Index>(data.cols()), "data row");
  if (k_max == 0 || k_max > spec.dim()) throw InvalidArgument("k_max must lie in [1, N]");
  validate_finite(data);

  const AttributionBatch interventional =
      attribute_interventional_batch(model, spec.mean(), data.values);
  const AttributionBatch observational =
      attribute_observational_batch(contract(exact_transforms(spec, exact), model, spec), data.values);

  const auto m = static_cast<Eigen::Index>(data.rows());
  const auto kk = static_cast<Eigen::Index>(k_max);
  // One column per individual.
  Eigen::MatrixXd d_int(kk, m);
  Eigen::MatrixXd d_obs(kk, m);
  Eigen::MatrixXd d_opt(kk, m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const Eigen::VectorXd x = data.values.row(r).transpose();
    // Imputing feature i moves the margin by -beta_i (x_i - mu_i); taking
    // the largest of those first is the best possible k-subset for every k.
    Eigen::VectorXd gain(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) gain(i) = model.coefficients(i) * (x(i) - spec.mean()(i));
    accumulate_imputation(model, spec.mean(), x, rank_descending(interventional.values.row(r).transpose()),
                          k_max, d_int.col(r));
    accumulate_imputation(model, spec.mean(), x, rank_descending(observational.values.row(r).transpose()),
                          k_max, d_obs.col(r));
    accumulate_imputation(model, spec.mean(), x, rank_descending(gain), k_max, d_opt.col(r));
  }

  RecourseReport report;
  report.k_max = k_max;
  report.individuals = data.rows();
  report.curves.push_back(summarize("interventional", d_int.transpose()));
  report.curves.push_back(summarize("observational", d_obs.transpose()));
  report.curves.push_back(summarize("greedy_optimal", d_opt.transpose()));
  return report;
}

RecourseProblem make_recourse_problem(const RecourseStudyConfig& config) {
  if (config.individuals < 2) throw InvalidArgument("need at least 2 individuals");
  if (!(config.rho > -1.0 && config.rho < 1.0)) throw InvalidArgument("rho must lie in (-1, 1)");
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(10, 10);
  sigma(0, 6) = sigma(6, 0) = config.rho;
  sigma(1, 7) = sigma(7, 1) = config.rho;
  GaussianSpec truth(Eigen::VectorXd::Zero(10), sigma);
  Eigen::VectorXd beta(10);
  beta << 1.2, 0.9, -0.7, 0.6, 0.5, -0.4, 0, 0, 0, 0;
  const double intercept = -1.0;

  DataMatrix data = sample_mvn(truth, config.individuals, derive_seed(config.seed, 0));
  std::mt19937_64 rng(derive_seed(config.seed, 1));
  std::uniform_real_distribution<double> uniform;
  Eigen::VectorXd labels(data.values.rows());
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    const double margin = data.values.row(i).dot(beta) + intercept;
    labels(i) = uniform(rng) < 1.0 / (1.0 + std::exp(-margin)) ? 1.0 : 0.0;
  }
  FitConfig fit;
  fit.penalty = config.penalty_per_sample * static_cast<double>(config.individuals);
  const FitResult result = fit_logistic(data, labels, fit);
  GaussianSpec estimated = empirical_moments(data);
  return RecourseProblem{std::move(truth), std::move(data), std::move(labels), result.model,
                         std::move(estimated), result.converged};
}

RecourseStudyReport run_recourse_study(const RecourseStudyConfig& config) {
  const RecourseProblem problem = make_recourse_problem(config);
  RecourseStudyReport report;
  report.config = config;
  report.model = problem.fitted;
  report.model_converged = problem.converged;
  report.result = run_recourse(problem.fitted, problem.estimated, problem.data, config.k_max);
  return report;
}

// ---------------------------------------------------------------- recovery

std::vector<std::size_t> recovery_curve(const std::vector<std::size_t>& ranking,
                                        const std::vector<std::size_t>& causal) {
  std::vector<std::size_t> out;
  out.reserve(ranking.size());
  std::size_t found = 0;
  for (std::size_t f : ranking) {
    if (std::binary_search(causal.begin(), causal.end(), f)) ++found;
    out.push_back(found);
  }
  return out;
}

const RecoveryCurve& RecoveryReport::curve(const std::string& model_kind,
                                           AttributionMode mode) const {
  for (const auto& c : curves) {
    if (c.model_kind == model_kind && c.mode == mode) return c;
  }
  throw InvalidArgument("no recovery curve for " + model_kind + "/" + std::string(to_string(mode)));
}

RecoveryReport run_recovery(const RecoveryConfig& config) {
  const std::size_t n = config.features;
  if (n == 0 || config.causal == 0 || config.causal > n) {
    throw InvalidArgument("need 1 <= causal <= features");
  }
  if (config.samples < config.cv.folds) throw InvalidArgument("fewer samples than folds");
  const std::size_t explained = config.explained == 0 ? config.samples : config.explained;
  if (explained > config.samples) throw InvalidArgument("cannot explain more samples than drawn");

  RecoveryReport report;
  report.config = config;

  std::vector<std::size_t> features(n);
  std::iota(features.begin(), features.end(), std::size_t{0});
  std::mt19937_64 pick(derive_seed(config.seed, 0));
  std::shuffle(features.begin(), features.end(), pick);
  report.causal.assign(features.begin(), features.begin() + static_cast<std::ptrdiff_t>(config.causal));
  std::sort(report.causal.begin(), report.causal.end());

  const GaussianSpec truth = build_covariance(CorrelationPattern::block(n, config.rho, config.block_size));
  const DataMatrix raw = sample_mvn(truth, config.samples, derive_seed(config.seed, 1));
  const SyntheticLabelSpec label_spec =
      make_label_spec(truth, FeatureSubset(n, report.causal), config.noise_fraction);
  report.noise_std = label_spec.noise_std;
  const Eigen::VectorXd labels = synthetic_labels(raw, label_spec, derive_seed(config.seed, 2));

  DataMatrix data;
  data.values = Standardization::fit(raw).apply(raw.values);
  const GaussianSpec spec = config.generating_moments ? truth : empirical_moments(data);

  CrossValidationConfig cv = config.cv;
  cv.seed = derive_seed(config.seed, 3);
  FitConfig lasso_cfg;
  lasso_cfg.l1_ratio = 1.0;
  const CrossValidationResult lasso = cross_validate_elastic_net(data, labels, lasso_cfg, cv);
  FitConfig en_cfg;
  en_cfg.l1_ratio = config.elastic_net_l1_ratio;
  const CrossValidationResult en = cross_validate_elastic_net(data, labels, en_cfg, cv);
  report.lasso_penalty = lasso.selected_penalty;
  report.elastic_net_penalty = en.selected_penalty;
  report.lasso_coefficients = lasso.fit.model.coefficients;
  report.elastic_net_coefficients = en.fit.model.coefficients;

  TransformTensor tensor;
  if (!config.force_sampled && n <= config.exact_cap) {
    ExactOptions opts;
    opts.cap = config.exact_cap;
    tensor = exact_transforms(spec, opts);
  } else {
    SampledOptions opts;
    opts.permutations = config.permutations;
    opts.antithetic = config.antithetic;
    opts.seed = derive_seed(config.seed, 4);
    tensor = sampled_transforms(spec, opts);
    report.observational_sampled = true;
  }

  const Eigen::MatrixXd rows = data.values.topRows(static_cast<Eigen::Index>(explained));
  const auto add_curves = [&](const std::string& kind, const LinearModel& model) {
    const AttributionBatch obs = attribute_observational_batch(contract(tensor, model, spec), rows);
    const AttributionBatch inter = attribute_interventional_batch(model, spec.mean(), rows);
    for (const AttributionBatch* batch : {&inter, &obs}) {
      RecoveryCurve c;
      c.model_kind = kind;
      c.mode = batch == &inter ? AttributionMode::kInterventional
                               : (report.observational_sampled ? AttributionMode::kObservationalSampled
                                                               : AttributionMode::kObservationalExact);
      c.importance = batch->values.cwiseAbs().colwise().mean().transpose();
      c.ranking = rank_descending(c.importance);
      c.recovered = recovery_curve(c.ranking, report.causal);
      const double total = std::accumulate(c.recovered.begin(), c.recovered.end(), 0.0);
      c.auc = total / (static_cast<double>(n) * static_cast<double>(config.causal));
      report.curves.push_back(std::move(c));
    }
  };
  add_curves("lasso", lasso.fit.model);
  add_curves("elastic_net", en.fit.model);

  for (std::size_t r = 1; r <= n; ++r) {
    report.random_expectation.push_back(static_cast<double>(config.causal) * static_cast<double>(r) /
                                        static_cast<double>(n));
  }
  report.random_auc = static_cast<double>(n + 1) / (2.0 * static_cast<double>(n));
  return report;
}

}  // namespace linshap
