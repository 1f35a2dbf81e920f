#include "linshap/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "linshap/error.hpp"

namespace linshap {

namespace {

constexpr std::size_t kGramFeatureLimit = 2000;

void check_config(const FitConfig& config) {
  if (!(config.penalty >= 0.0)) throw InvalidArgument("penalty must be >= 0");
  if (!(config.l1_ratio >= 0.0 && config.l1_ratio <= 1.0)) {
    throw InvalidArgument("l1_ratio must lie in [0, 1]");
  }
  if (!(config.tolerance > 0.0)) throw InvalidArgument("tolerance must be > 0");
  if (config.max_iterations < 1) throw InvalidArgument("max_iterations must be >= 1");
}

void check_labels(const DataMatrix& data, const Eigen::VectorXd& labels) {
  if (static_cast<std::size_t>(labels.size()) != data.rows()) {
    throw DimensionMismatch("label count " + std::to_string(labels.size()) +
                            " does not match sample count " + std::to_string(data.rows()));
  }
  if (data.rows() == 0) throw TooFewSamples("no samples to fit");
  validate_finite(data);
  if (!labels.allFinite()) throw NonFiniteInput("labels contain non-finite values");
}

// Centered (and optionally scaled) design in which coordinate descent runs.
struct Coordinates {
  Eigen::VectorXd center;
  Eigen::VectorXd scale;

  static Coordinates from(const Eigen::MatrixXd& x, bool standardize, bool centered) {
    Coordinates c;
    const auto m = static_cast<double>(x.rows());
    c.center = centered ? Eigen::VectorXd(x.colwise().mean().transpose())
                        : Eigen::VectorXd::Zero(x.cols());
    c.scale = Eigen::VectorXd::Ones(x.cols());
    if (standardize) {
      const Eigen::MatrixXd d = x.rowwise() - x.colwise().mean();
      c.scale = (d.colwise().squaredNorm() / m).cwiseSqrt().transpose();
      for (Eigen::Index j = 0; j < c.scale.size(); ++j) {
        if (!(c.scale(j) > 0.0)) c.scale(j) = 1.0;
      }
    }
    return c;
  }

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const {
    return (x.rowwise() - center.transpose()).array().rowwise() / scale.transpose().array();
  }
};

class ElasticNetProblem {
 public:
  ElasticNetProblem(Eigen::MatrixXd x, Eigen::VectorXd y)
      : x_(std::move(x)), y_(std::move(y)), m_(static_cast<double>(x_.rows())) {
    gram_mode_ = static_cast<std::size_t>(x_.cols()) <= kGramFeatureLimit;
    diag_ = x_.colwise().squaredNorm().transpose() / m_;
    c_ = x_.transpose() * y_ / m_;
    yy_ = y_.squaredNorm() / m_;
    if (gram_mode_) gram_ = x_.transpose() * x_ / m_;
  }

  Eigen::Index features() const { return x_.cols(); }
  const Eigen::VectorXd& correlations() const { return c_; }

  double objective(const Eigen::VectorXd& beta, double penalty, double l1_ratio) const {
    double loss;
    if (gram_mode_) {
      loss = 0.5 * yy_ - c_.dot(beta) + 0.5 * beta.dot(gram_ * beta);
    } else {
      loss = 0.5 * (y_ - x_ * beta).squaredNorm() / m_;
    }
    return loss + penalty * (l1_ratio * beta.lpNorm<1>() + 0.5 * (1.0 - l1_ratio) * beta.squaredNorm());
  }

  FitResult solve(double penalty, double l1_ratio, const FitConfig& config,
                  Eigen::VectorXd& beta) const {
    const Eigen::Index n = features();
    const double l1 = penalty * l1_ratio;
    const double l2 = penalty * (1.0 - l1_ratio);
    FitResult out;
    Eigen::VectorXd inner = gram_mode_ ? Eigen::VectorXd(gram_ * beta) : Eigen::VectorXd();
    Eigen::VectorXd residual = gram_mode_ ? Eigen::VectorXd() : Eigen::VectorXd(y_ - x_ * beta);

    for (std::size_t sweep = 0; sweep < config.max_iterations; ++sweep) {
      double max_change = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        const double old = beta(j);
        const double rho = gram_mode_ ? c_(j) - inner(j) + diag_(j) * old
                                      : x_.col(j).dot(residual) / m_ + diag_(j) * old;
        const double denom = diag_(j) + l2;
        const double updated = denom > 0.0 ? soft_threshold(rho, l1) / denom : 0.0;
        const double delta = updated - old;
        if (delta != 0.0) {
          if (gram_mode_) {
            inner += delta * gram_.col(j);
          } else {
            residual -= delta * x_.col(j);
          }
          beta(j) = updated;
          max_change = std::max(max_change, std::abs(delta));
        }
      }
      out.iterations = sweep + 1;
      if (config.record_objective) out.objective_trace.push_back(objective(beta, penalty, l1_ratio));
      if (max_change < config.tolerance) {
        out.converged = true;
        break;
      }
    }
    return out;
  }

 private:
  Eigen::MatrixXd x_;
  Eigen::VectorXd y_;
  double m_;
  bool gram_mode_ = true;
  Eigen::VectorXd diag_;
  Eigen::VectorXd c_;
  double yy_ = 0.0;
  Eigen::MatrixXd gram_;
};

LinearModel to_original_units(const Eigen::VectorXd& working_beta, double working_intercept,
                              const Coordinates& coords, Link link) {
  LinearModel model;
  model.coefficients = working_beta.cwiseQuotient(coords.scale);
  model.intercept = working_intercept - model.coefficients.dot(coords.center);
  model.link = link;
  return model;
}

FitResult fit_elastic_net_impl(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                               const FitConfig& config) {
  const Coordinates coords = Coordinates::from(x, config.standardize, true);
  const double y_mean = y.mean();
  ElasticNetProblem problem(coords.apply(x), y.array() - y_mean);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(x.cols());
  FitResult result = problem.solve(config.penalty, config.l1_ratio, config, beta);
  // The working design is centered, so the working intercept is mean(y).
  result.model = to_original_units(beta, y_mean, coords, Link::kIdentity);
  return result;
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Design carries a trailing column of ones; theta = [beta; intercept].
LogisticObjective logistic_terms(const Eigen::MatrixXd& design, const Eigen::VectorXd& labels,
                                 double penalty, const Eigen::VectorXd& theta) {
  const Eigen::Index n = theta.size() - 1;
  const Eigen::VectorXd z = design * theta;
  Eigen::VectorXd residual(z.size());
  LogisticObjective out;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    out.value += softplus(z(i)) - labels(i) * z(i);
    residual(i) = sigmoid(z(i)) - labels(i);
  }
  out.value += 0.5 * penalty * theta.head(n).squaredNorm();
  out.gradient = design.transpose() * residual;
  out.gradient.head(n) += penalty * theta.head(n);
  return out;
}

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = m.row(rows[r]);
  return out;
}

Eigen::VectorXd select_rows(const Eigen::VectorXd& v, const std::vector<Eigen::Index>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) out(static_cast<Eigen::Index>(r)) = v(rows[r]);
  return out;
}

}  // namespace

FitResult fit_elastic_net(const DataMatrix& data, const Eigen::VectorXd& labels,
                          const FitConfig& config) {
  check_config(config);
  check_labels(data, labels);
  return fit_elastic_net_impl(data.values, labels, config);
}

FitResult fit_logistic(const DataMatrix& data, const Eigen::VectorXd& labels,
                       const FitConfig& config) {
  check_config(config);
  check_labels(data, labels);
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    if (labels(i) != 0.0 && labels(i) != 1.0) {
      throw InvalidArgument("logistic labels must be 0 or 1 (row " + std::to_string(i) + ")");
    }
  }

  const Coordinates coords = Coordinates::from(data.values, config.standardize, config.standardize);
  const Eigen::Index m = data.values.rows();
  const Eigen::Index n = data.values.cols();
  Eigen::MatrixXd design(m, n + 1);
  design.leftCols(n) = coords.apply(data.values);
  design.col(n).setOnes();
  const double lambda = config.penalty;

  auto objective = [&](const Eigen::VectorXd& theta) {
    return logistic_terms(design, labels, lambda, theta).value;
  };

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(n + 1);
  FitResult result;
  double current = objective(theta);
  for (std::size_t it = 0; it < config.max_iterations; ++it) {
    const Eigen::VectorXd z = design * theta;
    Eigen::VectorXd p(m);
    Eigen::VectorXd w(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      p(i) = sigmoid(z(i));
      w(i) = p(i) * (1.0 - p(i));
    }
    if (lambda == 0.0) {
      bool separated = true;
      for (Eigen::Index i = 0; i < m && separated; ++i) {
        separated = (2.0 * labels(i) - 1.0) * z(i) > 0.0;
      }
      if (separated) {
        throw SeparableData("classes are perfectly separated; an L2 penalty > 0 is required");
      }
    }
    const Eigen::VectorXd grad = logistic_terms(design, labels, lambda, theta).gradient;
    result.iterations = it;
    if (grad.norm() < config.tolerance) {
      result.converged = true;
      break;
    }
    Eigen::MatrixXd hessian = design.transpose() * w.asDiagonal() * design;
    hessian.diagonal().head(n).array() += lambda;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hessian);
    Eigen::VectorXd step = -grad;
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
      Eigen::VectorXd newton = ldlt.solve(-grad);
      if (newton.allFinite() && newton.dot(grad) < 0.0) step = newton;
    }
    double t = 1.0;
    const double slope = grad.dot(step);
    double candidate = objective(theta + step);
    // Close to the optimum the predicted decrease falls below the rounding of
    // the summed loss; a full step that shrinks the gradient is then taken.
    const bool armijo = candidate <= current + 1e-4 * slope;
    const bool below_rounding = -slope <= 1e-10 * (1.0 + std::abs(current));
    const bool accept = armijo || (below_rounding && logistic_terms(design, labels, lambda, theta + step)
                                                             .gradient.norm() < grad.norm());
    if (!accept) {
      while (!(candidate <= current + 1e-4 * t * slope) && t > 1e-12) {
        t *= 0.5;
        candidate = objective(theta + t * step);
      }
      if (!(candidate < current)) break;  // stalled
    }
    candidate = std::min(candidate, current);
    theta += t * step;
    current = candidate;
    if (config.record_objective) result.objective_trace.push_back(current);
    result.iterations = it + 1;
  }
  result.model = to_original_units(theta.head(n), theta(n), coords, Link::kLogitMargin);
  return result;
}

LogisticObjective logistic_objective(const DataMatrix& data, const Eigen::VectorXd& labels,
                                     double penalty, const LinearModel& model) {
  check_labels(data, labels);
  if (model.dim() != data.cols()) throw DimensionMismatch("model and data disagree on features");
  Eigen::MatrixXd design(data.values.rows(), data.values.cols() + 1);
  design.leftCols(data.values.cols()) = data.values;
  design.col(data.values.cols()).setOnes();
  Eigen::VectorXd theta(model.dim() + 1);
  theta.head(model.dim()) = model.coefficients;
  theta(model.dim()) = model.intercept;
  return logistic_terms(design, labels, penalty, theta);
}

Eigen::VectorXd predict_margin(const LinearModel& model, const DataMatrix& data) {
  if (data.cols() != model.dim()) {
    throw DimensionMismatch("data has " + std::to_string(data.cols()) + " columns, model has " +
                            std::to_string(model.dim()) + " coefficients");
  }
  return (data.values * model.coefficients).array() + model.intercept;
}

CrossValidationResult cross_validate_elastic_net(const DataMatrix& data,
                                                 const Eigen::VectorXd& labels,
                                                 const FitConfig& base,
                                                 const CrossValidationConfig& cv) {
  check_config(base);
  check_labels(data, labels);
  if (cv.folds < 2 || cv.folds > data.rows()) throw InvalidArgument("invalid fold count");
  if (cv.grid_size < 1 || !(cv.grid_low > 0.0) || !(cv.grid_high >= cv.grid_low)) {
    throw InvalidArgument("invalid penalty grid");
  }

  // Grid scale: max_j |cov(x_j, y)| in the working coordinates.
  const Coordinates full = Coordinates::from(data.values, base.standardize, true);
  const Eigen::VectorXd yc = labels.array() - labels.mean();
  double scale = ((full.apply(data.values).transpose() * yc) / static_cast<double>(data.rows()))
                     .cwiseAbs()
                     .maxCoeff();
  if (!(scale > 0.0)) scale = 1.0;

  CrossValidationResult out;
  const double log_lo = std::log(cv.grid_low);
  const double log_hi = std::log(cv.grid_high);
  for (std::size_t g = 0; g < cv.grid_size; ++g) {
    const double frac =
        cv.grid_size == 1 ? 0.0 : static_cast<double>(g) / static_cast<double>(cv.grid_size - 1);
    out.penalties.push_back(scale * std::exp(log_hi + frac * (log_lo - log_hi)));
  }
  out.mean_squared_errors.assign(cv.grid_size, 0.0);

  std::vector<Eigen::Index> order(data.rows());
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(cv.seed);
  std::shuffle(order.begin(), order.end(), rng);

  for (std::size_t f = 0; f < cv.folds; ++f) {
    std::vector<Eigen::Index> train;
    std::vector<Eigen::Index> held;
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      (pos % cv.folds == f ? held : train).push_back(order[pos]);
    }
    const Eigen::MatrixXd x_train = select_rows(data.values, train);
    const Eigen::VectorXd y_train = select_rows(labels, train);
    const Eigen::MatrixXd x_held = select_rows(data.values, held);
    const Eigen::VectorXd y_held = select_rows(labels, held);

    const Coordinates coords = Coordinates::from(x_train, base.standardize, true);
    const double y_mean = y_train.mean();
    ElasticNetProblem problem(coords.apply(x_train), y_train.array() - y_mean);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(data.values.cols());
    FitConfig path_config = base;
    path_config.record_objective = false;
    for (std::size_t g = 0; g < cv.grid_size; ++g) {
      problem.solve(out.penalties[g], base.l1_ratio, path_config, beta);
      const LinearModel model = to_original_units(beta, y_mean, coords, Link::kIdentity);
      const Eigen::VectorXd pred = (x_held * model.coefficients).array() + model.intercept;
      out.mean_squared_errors[g] += (pred - y_held).squaredNorm() / static_cast<double>(data.rows());
    }
  }

  std::size_t best = 0;
  for (std::size_t g = 1; g < cv.grid_size; ++g) {
    if (out.mean_squared_errors[g] < out.mean_squared_errors[best]) best = g;
  }
  out.selected_penalty = out.penalties[best];
  FitConfig final_config = base;
  final_config.penalty = out.selected_penalty;
  out.fit = fit_elastic_net_impl(data.values, labels, final_config);
  return out;
}

}  // namespace linshap
