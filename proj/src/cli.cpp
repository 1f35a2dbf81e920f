#include "linshap/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "linshap/attribution.hpp"
#include "linshap/distribution.hpp"
#include "linshap/error.hpp"
#include "linshap/experiments.hpp"
#include "linshap/fitting.hpp"
#include "linshap/io.hpp"
#include "linshap/reports.hpp"
#include "linshap/transforms.hpp"

namespace linshap::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct SolveFlags {
  bool no_ridge = false;
  double condition_cap = 1e12;

  SolvePolicy policy() const { return {!no_ridge, condition_cap}; }
  void add(CLI::App* app) {
    app->add_flag("--no-ridge", no_ridge, "Fail on ill-conditioned blocks instead of ridging");
    app->add_option("--condition-cap", condition_cap, "Condition estimate that triggers the ridge")
        ->check(CLI::PositiveNumber);
  }
  void record(json& c) const {
    c["ridge_fallback"] = !no_ridge;
    c["condition_cap"] = condition_cap;
  }
};

struct SamplingFlags {
  std::uint64_t permutations = 1000;
  std::uint64_t seed = 0;
  bool antithetic = false;
  std::size_t cap = 20;
  bool allow_above_cap = false;
  unsigned workers = 1;
  SolveFlags solve;

  void add(CLI::App* app, bool with_permutations) {
    if (with_permutations) {
      app->add_option("--permutations", permutations, "Sampled orderings")->check(CLI::PositiveNumber);
    }
    app->add_option("--seed", seed, "Seed for sampled orderings");
    app->add_flag("--antithetic", antithetic, "Also walk every ordering reversed");
    app->add_option("--cap", cap, "Largest N allowed for exact enumeration");
    app->add_flag("--allow-above-cap", allow_above_cap, "Enumerate even when N exceeds --cap");
    app->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
    solve.add(app);
  }
  ExactOptions exact() const { return {cap, allow_above_cap, solve.policy(), workers}; }
  SampledOptions sampled() const { return {permutations, seed, antithetic, solve.policy(), workers}; }
  void record(json& c, bool sampled_mode) const {
    if (sampled_mode) {
      c["permutations"] = permutations;
      c["seed"] = seed;
      c["antithetic"] = antithetic;
    } else {
      c["cap"] = cap;
      c["allow_above_cap"] = allow_above_cap;
    }
    c["workers"] = workers;
    solve.record(c);
  }
};

std::vector<std::string> default_names(std::size_t n) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back("x" + std::to_string(i));
  return names;
}

bool same_standardization(const std::optional<Standardization>& a,
                          const std::optional<Standardization>& b) {
  if (a.has_value() != b.has_value()) return false;
  if (!a) return true;
  return a->center.size() == b->center.size() && a->scale.size() == b->scale.size() &&
         a->center == b->center && a->scale == b->scale;
}

// Columns of `samples` in the order of `names`; extra columns are ignored.
Eigen::MatrixXd select_features(const DataMatrix& samples, const std::vector<std::string>& names,
                                std::size_t dim) {
  if (names.empty() || samples.column_names.empty()) {
    check_length(dim, static_cast<Eigen::Index>(samples.cols()), "sample columns");
    return samples.values;
  }
  Eigen::MatrixXd out(samples.values.rows(), static_cast<Eigen::Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) {
    std::size_t found = samples.cols();
    for (std::size_t c = 0; c < samples.cols(); ++c) {
      if (samples.column_names[c] == names[j]) {
        found = c;
        break;
      }
    }
    if (found == samples.cols()) throw DimensionMismatch("samples lack feature column '" + names[j] + "'");
    out.col(static_cast<Eigen::Index>(j)) = samples.values.col(static_cast<Eigen::Index>(found));
  }
  return out;
}

// ---------------------------------------------------------------- fit

struct FitArgs {
  std::string data, labels, label_column = "y", model = "elastic-net", out;
  std::optional<double> penalty;
  double l1_ratio = 1.0;
  bool cv = false;
  std::size_t folds = 5, grid_size = 20, max_iterations = 10'000;
  std::uint64_t seed = 0;
  bool standardize = false, strict = false;
  double tolerance = 1e-7;
};

int run_fit(const FitArgs& a, std::ostream& err) {
  DataMatrix data = io::ingest_csv(a.data);
  Eigen::VectorXd labels;
  if (!a.labels.empty()) {
    DataMatrix l = io::ingest_csv(a.labels);
    if (l.cols() != 1) throw DimensionMismatch("labels file must hold exactly one column");
    labels = l.values.col(0);
  } else {
    labels = io::take_column(data, a.label_column);
  }
  check_length(data.rows(), labels.size(), "labels");

  std::optional<Standardization> standardization;
  if (a.standardize) {
    standardization = Standardization::fit(data);
    data.values = standardization->apply(data.values);
  }

  FitConfig cfg;
  cfg.l1_ratio = a.l1_ratio;
  cfg.max_iterations = a.max_iterations;
  cfg.tolerance = a.tolerance;

  json config = {{"command", "fit"},       {"data", a.data},
                 {"labels", a.labels},     {"label_column", a.labels.empty() ? json(a.label_column) : json(nullptr)},
                 {"model", a.model},       {"standardize", a.standardize},
                 {"max_iterations", a.max_iterations}, {"tolerance", a.tolerance},
                 {"strict", a.strict}};
  json summary = json::object();
  FitResult result;
  if (a.model == "logistic") {
    cfg.penalty = a.penalty.value_or(1e-4 * static_cast<double>(data.rows()));
    config["penalty"] = cfg.penalty;
    result = fit_logistic(data, labels, cfg);
  } else if (a.cv) {
    CrossValidationConfig cv;
    cv.folds = a.folds;
    cv.grid_size = a.grid_size;
    cv.seed = a.seed;
    config.update({{"l1_ratio", a.l1_ratio}, {"cv", true}, {"folds", a.folds},
                   {"grid_size", a.grid_size}, {"seed", a.seed}});
    auto r = cross_validate_elastic_net(data, labels, cfg, cv);
    summary["selected_penalty"] = r.selected_penalty;
    summary["cv_penalties"] = r.penalties;
    summary["cv_mean_squared_errors"] = r.mean_squared_errors;
    result = std::move(r.fit);
  } else {
    if (!a.penalty) throw InvalidArgument("elastic-net needs --penalty or --cv");
    cfg.penalty = *a.penalty;
    config.update({{"l1_ratio", a.l1_ratio}, {"penalty", cfg.penalty}});
    result = fit_elastic_net(data, labels, cfg);
  }
  summary["converged"] = result.converged;
  summary["iterations"] = result.iterations;

  if (!result.converged) {
    const std::string msg = a.model + " fit stopped after " + std::to_string(result.iterations) +
                            " iterations without converging";
    if (a.strict) throw NotConverged(msg);
    err << "warning: " << msg << "\n";
  }

  io::ModelFile file{result.model,
                     data.column_names.empty() ? default_names(data.cols()) : data.column_names,
                     standardization, config, summary};
  io::save_model(a.out, file);
  return kExitOk;
}

// ---------------------------------------------------------------- estimate-dist

struct EstimateArgs {
  std::string data, out, target = "diagonal";
  std::vector<std::string> exclude;
  bool standardize = false;
  double shrinkage = 0.0;
};

int run_estimate(const EstimateArgs& a) {
  DataMatrix data = io::ingest_csv(a.data);
  for (const auto& n : a.exclude) io::take_column(data, n);
  std::optional<Standardization> standardization;
  if (a.standardize) {
    standardization = Standardization::fit(data);
    data.values = standardization->apply(data.values);
  }
  GaussianSpec spec = empirical_moments(data);
  if (a.shrinkage > 0.0) {
    ShrinkageConfig s;
    s.intensity = a.shrinkage;
    s.target = a.target == "scaled-identity" ? ShrinkageTarget::kScaledIdentity
                                             : ShrinkageTarget::kDiagonalOfSample;
    spec = shrink(spec, s);
  }
  json config = {{"command", "estimate-dist"}, {"data", a.data},
                 {"exclude", a.exclude},       {"standardize", a.standardize},
                 {"shrinkage", a.shrinkage},   {"target", a.target}};
  io::SpecFile file{spec, data.column_names.empty() ? default_names(data.cols()) : data.column_names,
                    standardization, config, json{{"samples", data.rows()}}};
  io::save_spec(a.out, file);
  return kExitOk;
}

// ---------------------------------------------------------------- transforms

struct TransformArgs {
  std::string spec, out;
  bool exact = false;
  SamplingFlags sampling;
};

int run_transforms(const TransformArgs& a, const CLI::App& sub) {
  const bool sampled = sub.count("--permutations") > 0;
  if (sampled == a.exact) throw InvalidArgument("pass exactly one of --exact or --permutations");
  const io::SpecFile file = io::load_spec(a.spec);
  json config = {{"command", "transforms"}, {"spec", a.spec}, {"mode", sampled ? "sampled" : "exact"}};
  a.sampling.record(config, sampled);
  const TransformTensor tensor = sampled ? sampled_transforms(file.spec, a.sampling.sampled())
                                         : exact_transforms(file.spec, a.sampling.exact());
  io::persist_tensor(tensor, a.out, config);
  return kExitOk;
}

// ---------------------------------------------------------------- explain

struct ExplainArgs {
  std::string model, spec, samples, tensor, mode, out;
  SamplingFlags sampling;
};

int run_explain(const ExplainArgs& a, std::ostream& out) {
  if (a.tensor.empty() == a.mode.empty()) throw InvalidArgument("pass exactly one of --tensor or --mode");
  const io::ModelFile model = io::load_model(a.model);
  const io::SpecFile spec = io::load_spec(a.spec);
  check_dimensions(model.model, spec.spec);
  if (!same_standardization(model.standardization, spec.standardization)) {
    throw InvalidDistribution("model and spec were built with different standardization");
  }
  if (!model.feature_names.empty() && !spec.feature_names.empty() &&
      model.feature_names != spec.feature_names) {
    throw DimensionMismatch("model and spec name different features");
  }

  const DataMatrix samples = io::ingest_csv(a.samples);
  Eigen::MatrixXd x = select_features(samples, model.feature_names, model.model.dim());
  if (model.standardization) x = model.standardization->apply(x);

  json config = {{"command", "explain"}, {"model", a.model}, {"spec", a.spec}, {"samples", a.samples}};
  AttributionBatch batch;
  if (!a.tensor.empty()) {
    const TransformTensor tensor = io::load_tensor(a.tensor, &spec.spec);
    config["tensor"] = a.tensor;
    batch = attribute_observational_batch(contract(tensor, model.model, spec.spec), x);
  } else if (a.mode == "interventional") {
    config["mode"] = a.mode;
    batch = attribute_interventional_batch(model.model, spec.spec.mean(), x);
  } else {
    const bool sampled = a.mode == "observational-sampled";
    config["mode"] = a.mode;
    a.sampling.record(config, sampled);
    const TransformTensor tensor = sampled ? sampled_transforms(spec.spec, a.sampling.sampled())
                                           : exact_transforms(spec.spec, a.sampling.exact());
    batch = attribute_observational_batch(contract(tensor, model.model, spec.spec), x);
  }

  const Eigen::VectorXd prediction =
      (x * model.model.coefficients).array() + model.model.intercept;
  io::CsvTable table;
  table.header = model.feature_names.empty() ? default_names(model.model.dim()) : model.feature_names;
  table.header.insert(table.header.end(), {"base_value", "prediction", "mode"});
  const std::string mode(to_string(batch.mode));
  for (Eigen::Index r = 0; r < batch.values.rows(); ++r) {
    std::vector<std::string> row;
    for (Eigen::Index c = 0; c < batch.values.cols(); ++c) row.push_back(io::format_double(batch.values(r, c)));
    row.push_back(io::format_double(batch.base_value));
    row.push_back(io::format_double(prediction(r)));
    row.push_back(mode);
    table.rows.push_back(std::move(row));
  }
  const std::string hash = io::config_hash(config);
  if (a.out.empty() || a.out == "-") {
    out << io::render_csv(table, hash);
  } else {
    io::write_csv(a.out, table, hash);
  }
  return kExitOk;
}

// ---------------------------------------------------------------- experiment

struct ExperimentArgs {
  std::string out;
  std::uint64_t seed = 0;
  // convergence
  std::vector<std::uint64_t> schedule = {1, 4, 16, 64, 256, 1024};
  std::size_t repeats = 20;
  bool antithetic = false;
  double convergence_rho = 0.8;
  // dummy
  double dummy_rho = 0.8;
  // recourse
  RecourseStudyConfig recourse;
  // recovery
  RecoveryConfig recovery;
  std::size_t seeds = 1;
};

void report_paths(const std::vector<fs::path>& paths, std::ostream& err) {
  for (const auto& p : paths) err << "wrote " << p.string() << "\n";
}

int run_convergence_cmd(const ExperimentArgs& a, std::ostream& err) {
  ConvergenceConfig c;
  c.patterns = {CorrelationPattern::independent(3), CorrelationPattern::pair(3, a.convergence_rho, 1, 2),
                CorrelationPattern::equicorrelated(3, a.convergence_rho)};
  c.permutation_schedule = a.schedule;
  c.repeats = a.repeats;
  c.antithetic = a.antithetic;
  c.seed = a.seed;
  report_paths(io::write_report(a.out, run_convergence(c)), err);
  return kExitOk;
}

int run_recourse_cmd(ExperimentArgs a, std::ostream& err) {
  a.recourse.seed = a.seed;
  const RecourseStudyReport r = run_recourse_study(a.recourse);
  if (!r.model_converged) err << "warning: recourse model fit did not converge\n";
  report_paths(io::write_report(a.out, r), err);
  return kExitOk;
}

int run_recovery_cmd(const ExperimentArgs& a, std::ostream& err) {
  if (a.seeds == 0) throw InvalidArgument("--seeds must be at least 1");
  std::vector<RecoveryReport> runs;
  for (std::size_t s = 0; s < a.seeds; ++s) {
    RecoveryConfig c = a.recovery;
    c.seed = a.seed + s;
    runs.push_back(run_recovery(c));
  }
  report_paths(io::write_report(a.out, runs), err);
  return kExitOk;
}

int category_exit(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::kUsage:
      return kExitUsage;
    case ErrorCategory::kData:
      return kExitData;
    case ErrorCategory::kNumerical:
      return kExitNumerical;
  }
  return kExitData;
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Shapley attributions for linear models under Gaussian features", "linshap"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read option values from a TOML/INI file; flags override it");
  app.option_defaults()->always_capture_default();

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit an elastic-net or L2-logistic model from CSV");
  fit_cmd->add_option("--data", fit.data, "Feature CSV")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--labels", fit.labels, "One-column label CSV (otherwise --label-column)")
      ->check(CLI::ExistingFile);
  fit_cmd->add_option("--label-column", fit.label_column, "Label column inside --data");
  fit_cmd->add_option("--model", fit.model, "Model family")
      ->check(CLI::IsMember({"elastic-net", "logistic"}));
  fit_cmd->add_option("--penalty", fit.penalty, "Penalty (logistic default: 1e-4 * rows)")
      ->check(CLI::NonNegativeNumber);
  fit_cmd->add_option("--l1-ratio", fit.l1_ratio, "Elastic-net L1 share")->check(CLI::Range(0.0, 1.0));
  fit_cmd->add_flag("--cv", fit.cv, "Choose the elastic-net penalty by cross-validation");
  fit_cmd->add_option("--folds", fit.folds, "Cross-validation folds")->check(CLI::Range(2, 1000));
  fit_cmd->add_option("--grid-size", fit.grid_size, "Penalty grid size")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--seed", fit.seed, "Fold assignment seed");
  fit_cmd->add_flag("--standardize", fit.standardize, "Z-score feature columns before fitting");
  fit_cmd->add_option("--max-iterations", fit.max_iterations, "Iteration limit")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--tolerance", fit.tolerance, "Convergence tolerance")->check(CLI::PositiveNumber);
  fit_cmd->add_flag("--strict", fit.strict, "Exit 3 instead of warning when the fit does not converge");
  fit_cmd->add_option("--out", fit.out, "Model file")->required();

  EstimateArgs est;
  auto* est_cmd = app.add_subcommand("estimate-dist", "Estimate a Gaussian feature distribution from CSV");
  est_cmd->add_option("--data", est.data, "Feature CSV")->required()->check(CLI::ExistingFile);
  est_cmd->add_option("--exclude", est.exclude, "Columns to drop (e.g. the label)");
  est_cmd->add_flag("--standardize", est.standardize, "Z-score columns before estimating");
  est_cmd->add_option("--shrinkage", est.shrinkage, "Shrinkage intensity")->check(CLI::Range(0.0, 1.0));
  est_cmd->add_option("--target", est.target, "Shrinkage target")
      ->check(CLI::IsMember({"diagonal", "scaled-identity"}));
  est_cmd->add_option("--out", est.out, "Spec file")->required();

  TransformArgs tr;
  auto* tr_cmd = app.add_subcommand("transforms", "Precompute the transform tensor of a spec");
  tr_cmd->add_option("--spec", tr.spec, "Spec file")->required()->check(CLI::ExistingFile);
  auto* tr_exact = tr_cmd->add_flag("--exact", tr.exact, "Enumerate all subsets");
  tr.sampling.add(tr_cmd, true);
  tr_exact->excludes(tr_cmd->get_option("--permutations"));
  tr_cmd->add_option("--out", tr.out, "Tensor file")->required();

  ExplainArgs ex;
  auto* ex_cmd = app.add_subcommand("explain", "Attribute samples to features");
  ex_cmd->add_option("--model", ex.model, "Model file")->required()->check(CLI::ExistingFile);
  ex_cmd->add_option("--spec", ex.spec, "Spec file")->required()->check(CLI::ExistingFile);
  ex_cmd->add_option("--samples", ex.samples, "Sample CSV")->required()->check(CLI::ExistingFile);
  auto* ex_tensor = ex_cmd->add_option("--tensor", ex.tensor, "Precomputed tensor file")
                        ->check(CLI::ExistingFile);
  ex_cmd->add_option("--mode", ex.mode, "Attribution mode when no tensor is given")
      ->check(CLI::IsMember({"interventional", "observational-exact", "observational-sampled"}))
      ->excludes(ex_tensor);
  ex.sampling.add(ex_cmd, true);
  ex_cmd->add_option("--out", ex.out, "Attribution CSV (default: standard output)");

  ExperimentArgs xa;
  auto* xp_cmd = app.add_subcommand("experiment", "Run a built-in study");
  xp_cmd->require_subcommand(1);
  auto common = [&](CLI::App* c) {
    c->add_option("--out", xa.out, "Report JSON; curve CSVs are written beside it")->required();
    c->add_option("--seed", xa.seed, "Base seed");
  };
  auto* conv = xp_cmd->add_subcommand("convergence", "Sampling error versus permutation count");
  common(conv);
  conv->add_option("--schedule", xa.schedule, "Permutation counts")->expected(1, -1);
  conv->add_option("--repeats", xa.repeats, "Estimates per count")->check(CLI::Range(2, 1000000));
  conv->add_flag("--antithetic", xa.antithetic, "Antithetic orderings");
  conv->add_option("--rho", xa.convergence_rho, "Correlation of the pair and equicorrelated patterns");
  auto* dummy = xp_cmd->add_subcommand("dummy", "Two-feature dummy instance");
  common(dummy);
  dummy->add_option("--rho", xa.dummy_rho, "Feature correlation")->check(CLI::Range(-1.0, 1.0));
  auto* rec = xp_cmd->add_subcommand("recourse", "Top-k imputation curves on a planted credit model");
  common(rec);
  rec->add_option("--individuals", xa.recourse.individuals, "Sample size")->check(CLI::PositiveNumber);
  rec->add_option("--k-max", xa.recourse.k_max, "Largest k")->check(CLI::Range(1, 10));
  rec->add_option("--rho", xa.recourse.rho, "Correlation of the planted dummies");
  rec->add_option("--penalty-per-sample", xa.recourse.penalty_per_sample, "Logistic penalty / rows");
  auto* recov = xp_cmd->add_subcommand("recovery", "Causal feature recovery from Shapley rankings");
  common(recov);
  auto& rc = xa.recovery;
  recov->add_option("--features", rc.features, "Feature count")->check(CLI::PositiveNumber);
  recov->add_option("--causal", rc.causal, "Causal feature count")->check(CLI::PositiveNumber);
  recov->add_option("--block-size", rc.block_size, "Correlation block size")->check(CLI::PositiveNumber);
  recov->add_option("--rho", rc.rho, "Within-block correlation");
  recov->add_option("--samples", rc.samples, "Sample size")->check(CLI::PositiveNumber);
  recov->add_option("--explained", rc.explained, "Samples explained (0 = all)");
  recov->add_option("--noise-fraction", rc.noise_fraction, "Label noise / noiseless label std");
  recov->add_option("--l1-ratio", rc.elastic_net_l1_ratio, "Elastic-net L1 share")
      ->check(CLI::Range(0.0, 1.0));
  recov->add_option("--folds", rc.cv.folds, "Cross-validation folds")->check(CLI::Range(2, 1000));
  recov->add_option("--grid-size", rc.cv.grid_size, "Penalty grid size")->check(CLI::PositiveNumber);
  recov->add_option("--exact-cap", rc.exact_cap, "Largest N explained by exact enumeration");
  recov->add_flag("--force-sampled", rc.force_sampled, "Always use sampled transforms");
  recov->add_flag("--generating-moments", rc.generating_moments,
                  "Explain against the generating distribution");
  recov->add_option("--permutations", rc.permutations, "Sampled orderings")->check(CLI::PositiveNumber);
  recov->add_flag("--antithetic", rc.antithetic, "Antithetic orderings");
  recov->add_option("--seeds", xa.seeds, "Runs, with seeds seed, seed+1, ...")->check(CLI::PositiveNumber);

  std::string report_path;
  auto* rep_cmd = app.add_subcommand("report", "Summarize a report JSON");
  rep_cmd->add_option("path", report_path, "Report file")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*fit_cmd) return run_fit(fit, err);
    if (*est_cmd) return run_estimate(est);
    if (*tr_cmd) return run_transforms(tr, *tr_cmd);
    if (*ex_cmd) return run_explain(ex, out);
    if (*conv) return run_convergence_cmd(xa, err);
    if (*dummy) {
      report_paths(io::write_report(xa.out, run_dummy_feature(xa.dummy_rho, xa.seed)), err);
      return kExitOk;
    }
    if (*rec) return run_recourse_cmd(xa, err);
    if (*recov) return run_recovery_cmd(xa, err);
    if (*rep_cmd) {
      json doc;
      try {
        doc = json::parse(io::read_file(report_path));
      } catch (const json::exception& e) {
        throw FileError(report_path + ": " + e.what());
      }
      out << io::summarize_report(doc);
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return category_exit(e.category());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

int cli_dispatch(int argc, const char* const* argv) { return cli_dispatch(argc, argv, std::cout, std::cerr); }

}  // namespace linshap::cli
