#include "linshap/reports.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "linshap/error.hpp"
#include "linshap/io.hpp"

namespace linshap::io {

using nlohmann::json;

namespace {

json vec(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out.push_back(std::isfinite(v(i)) ? json(v(i)) : json(nullptr));
  }
  return out;
}

std::string num(double v) { return format_double(v); }

json envelope(const char* experiment, const json& config) {
  return {{"format_version", kFormatVersion},
          {"kind", "report"},
          {"experiment", experiment},
          {"config_hash", config_hash(config)},
          {"config", config},
          {"seed", config.value("seed", json(nullptr))}};
}

std::filesystem::path sibling(const std::filesystem::path& path, const std::string& part) {
  std::filesystem::path out = path;
  out.replace_filename(path.stem().string() + "_" + part + ".csv");
  return out;
}

// Writes the CSVs first so the document can list them.
std::vector<std::filesystem::path> emit(const std::filesystem::path& path, json doc,
                                        const std::vector<std::pair<std::string, CsvTable>>& tables) {
  std::vector<std::filesystem::path> written;
  json names = json::array();
  for (const auto& [part, table] : tables) {
    const auto p = sibling(path, part);
    write_csv(p, table, doc.at("config_hash").get<std::string>());
    names.push_back(p.filename().string());
    written.push_back(p);
  }
  doc["csv_files"] = names;
  write_atomic(path, doc.dump(2) + "\n");
  written.insert(written.begin(), path);
  return written;
}

json pattern_json(const CorrelationPattern& p) {
  json j = {{"kind", std::string(to_string(p.kind))}, {"dim", p.dim}, {"label", p.describe()}};
  if (p.kind != CorrelationPattern::Kind::kIndependent) j["rho"] = p.rho;
  if (p.kind == CorrelationPattern::Kind::kPair) j["features"] = {p.first, p.second};
  if (p.kind == CorrelationPattern::Kind::kBlock) j["block_size"] = p.block_size;
  return j;
}

const char* mode_name(AttributionMode m) { return to_string(m).data(); }

}  // namespace

// ---------------------------------------------------------------- configs

json convergence_config_json(const ConvergenceConfig& c) {
  json patterns = json::array();
  for (const auto& p : c.patterns) patterns.push_back(pattern_json(p));
  return {{"coefficients", vec(c.coefficients)},
          {"x", vec(c.x)},
          {"patterns", patterns},
          {"permutation_schedule", c.permutation_schedule},
          {"repeats", c.repeats},
          {"antithetic", c.antithetic},
          {"seed", c.seed}};
}

json recourse_config_json(const RecourseStudyConfig& c) {
  return {{"individuals", c.individuals},
          {"features", 10},
          {"k_max", c.k_max},
          {"rho", c.rho},
          {"penalty_per_sample", c.penalty_per_sample},
          {"ranking", "signed attribution, descending; ties by ascending feature index"},
          {"design", "planted dummies: features 6,7 unused and correlated with 0,1; 8,9 unused noise"},
          {"seed", c.seed}};
}

json recovery_config_json(const RecoveryConfig& c) {
  return {{"features", c.features},
          {"causal", c.causal},
          {"block_size", c.block_size},
          {"rho", c.rho},
          {"correlation_stand_in",
           CorrelationPattern::block(c.features, c.rho, c.block_size).describe()},
          {"samples", c.samples},
          {"explained", c.explained == 0 ? c.samples : c.explained},
          {"noise_fraction", c.noise_fraction},
          {"standardized", true},
          {"generating_moments", c.generating_moments},
          {"elastic_net_l1_ratio", c.elastic_net_l1_ratio},
          {"cv",
           {{"folds", c.cv.folds},
            {"grid_size", c.cv.grid_size},
            {"grid_low", c.cv.grid_low},
            {"grid_high", c.cv.grid_high}}},
          {"exact_cap", c.exact_cap},
          {"force_sampled", c.force_sampled},
          {"permutations", c.permutations},
          {"antithetic", c.antithetic},
          {"seed", c.seed}};
}

// ---------------------------------------------------------------- convergence

json report_json(const ConvergenceReport& report) {
  json doc = envelope("convergence", convergence_config_json(report.config));
  json series = json::array();
  for (const auto& s : report.series) {
    json steps = json::array();
    for (Eigen::Index k = 0; k < s.std.rows(); ++k) {
      steps.push_back({{"permutations", report.config.permutation_schedule[static_cast<std::size_t>(k)]},
                       {"mean", vec(s.mean.row(k).transpose())},
                       {"std", vec(s.std.row(k).transpose())}});
    }
    series.push_back({{"pattern", pattern_json(s.pattern)},
                      {"exact", vec(s.exact)},
                      {"quadrupling_ratio", vec(s.quadrupling_ratio)},
                      {"steps", steps}});
  }
  doc["series"] = series;
  return doc;
}

std::vector<std::filesystem::path> write_report(const std::filesystem::path& path,
                                                const ConvergenceReport& report) {
  std::vector<std::pair<std::string, CsvTable>> tables;
  for (std::size_t p = 0; p < report.series.size(); ++p) {
    const auto& s = report.series[p];
    CsvTable t;
    t.header.push_back("permutations");
    for (Eigen::Index i = 0; i < s.std.cols(); ++i) t.header.push_back("std_" + std::to_string(i));
    for (Eigen::Index i = 0; i < s.mean.cols(); ++i) t.header.push_back("mean_" + std::to_string(i));
    for (Eigen::Index k = 0; k < s.std.rows(); ++k) {
      std::vector<std::string> row{std::to_string(report.config.permutation_schedule[static_cast<std::size_t>(k)])};
      for (Eigen::Index i = 0; i < s.std.cols(); ++i) row.push_back(num(s.std(k, i)));
      for (Eigen::Index i = 0; i < s.mean.cols(); ++i) row.push_back(num(s.mean(k, i)));
      t.rows.push_back(std::move(row));
    }
    tables.emplace_back(std::to_string(p) + "_" + std::string(to_string(s.pattern.kind)), std::move(t));
  }
  return emit(path, report_json(report), tables);
}

// ---------------------------------------------------------------- dummy

json report_json(const DummyFeatureReport& r) {
  json doc = envelope("dummy", {{"rho", r.rho},
                                {"coefficients", {1.0, 0.0}},
                                {"x", {1.0, 1.0}},
                                {"seed", r.seed}});
  doc["interventional"] = vec(r.interventional);
  doc["observational"] = vec(r.observational);
  doc["brute_force_observational"] = vec(r.brute_force_observational);
  return doc;
}

std::vector<std::filesystem::path> write_report(const std::filesystem::path& path,
                                                const DummyFeatureReport& r) {
  CsvTable t;
  t.header = {"feature", "interventional", "observational", "brute_force_observational"};
  for (Eigen::Index i = 0; i < r.interventional.size(); ++i) {
    t.rows.push_back({std::to_string(i), num(r.interventional(i)), num(r.observational(i)),
                      num(r.brute_force_observational(i))});
  }
  return emit(path, report_json(r), {{"attributions", t}});
}

// ---------------------------------------------------------------- recourse

json report_json(const RecourseStudyReport& r) {
  json doc = envelope("recourse", recourse_config_json(r.config));
  doc["model"] = {{"coefficients", vec(r.model.coefficients)},
                  {"intercept", r.model.intercept},
                  {"link", "logit_margin"},
                  {"converged", r.model_converged}};
  doc["individuals"] = r.result.individuals;
  doc["k_max"] = r.result.k_max;
  json curves = json::array();
  for (const auto& c : r.result.curves) {
    curves.push_back({{"ranking", c.ranking}, {"mean_delta", c.mean_delta}, {"std_delta", c.std_delta}});
  }
  doc["curves"] = curves;
  return doc;
}

std::vector<std::filesystem::path> write_report(const std::filesystem::path& path,
                                                const RecourseStudyReport& r) {
  CsvTable t;
  t.header = {"k"};
  for (const auto& c : r.result.curves) {
    t.header.push_back(c.ranking + "_mean");
    t.header.push_back(c.ranking + "_std");
  }
  for (std::size_t k = 0; k < r.result.k_max; ++k) {
    std::vector<std::string> row{std::to_string(k + 1)};
    for (const auto& c : r.result.curves) {
      row.push_back(num(c.mean_delta[k]));
      row.push_back(num(c.std_delta[k]));
    }
    t.rows.push_back(std::move(row));
  }
  return emit(path, report_json(r), {{"curves", t}});
}

// ---------------------------------------------------------------- recovery

json report_json(const std::vector<RecoveryReport>& runs) {
  if (runs.empty()) throw InvalidArgument("no recovery runs to report");
  json config = recovery_config_json(runs.front().config);
  json seeds = json::array();
  for (const auto& r : runs) seeds.push_back(r.config.seed);
  config["seeds"] = seeds;
  json doc = envelope("recovery", config);

  json out = json::array();
  std::map<std::string, double> auc_sum;
  for (const auto& r : runs) {
    json curves = json::array();
    for (const auto& c : r.curves) {
      curves.push_back({{"model", c.model_kind},
                        {"mode", mode_name(c.mode)},
                        {"auc", c.auc},
                        {"importance", vec(c.importance)},
                        {"ranking", c.ranking},
                        {"recovered", c.recovered}});
      auc_sum[c.model_kind + "/" + (c.mode == AttributionMode::kInterventional ? "interventional"
                                                                               : "observational")] += c.auc;
    }
    out.push_back({{"seed", r.config.seed},
                   {"causal", r.causal},
                   {"noise_std", r.noise_std},
                   {"observational_sampled", r.observational_sampled},
                   {"lasso_penalty", r.lasso_penalty},
                   {"elastic_net_penalty", r.elastic_net_penalty},
                   {"lasso_coefficients", vec(r.lasso_coefficients)},
                   {"elastic_net_coefficients", vec(r.elastic_net_coefficients)},
                   {"random_auc", r.random_auc},
                   {"curves", curves}});
  }
  doc["runs"] = out;
  json mean_auc = json::object();
  for (const auto& [key, sum] : auc_sum) mean_auc[key] = sum / static_cast<double>(runs.size());
  doc["mean_auc"] = mean_auc;
  doc["random_auc"] = runs.front().random_auc;
  doc["random_expectation"] = runs.front().random_expectation;
  return doc;
}

std::vector<std::filesystem::path> write_report(const std::filesystem::path& path,
                                                const std::vector<RecoveryReport>& runs) {
  const json doc = report_json(runs);
  std::vector<std::pair<std::string, CsvTable>> tables;
  CsvTable summary;
  summary.header = {"seed"};
  for (const auto& c : runs.front().curves) {
    summary.header.push_back(c.model_kind + "_" + (c.mode == AttributionMode::kInterventional ? "interventional" : "observational") + "_auc");
  }
  summary.header.push_back("random_auc");
  for (const auto& r : runs) {
    std::vector<std::string> row{std::to_string(r.config.seed)};
    for (const auto& c : r.curves) row.push_back(num(c.auc));
    row.push_back(num(r.random_auc));
    summary.rows.push_back(std::move(row));

    CsvTable t;
    t.header = {"rank", "random"};
    for (const auto& c : r.curves) {
      t.header.push_back(c.model_kind + "_" + (c.mode == AttributionMode::kInterventional ? "interventional" : "observational"));
    }
    for (std::size_t k = 0; k < r.random_expectation.size(); ++k) {
      std::vector<std::string> line{std::to_string(k + 1), num(r.random_expectation[k])};
      for (const auto& c : r.curves) line.push_back(std::to_string(c.recovered[k]));
      t.rows.push_back(std::move(line));
    }
    tables.emplace_back("seed" + std::to_string(r.config.seed), std::move(t));
  }
  tables.emplace(tables.begin(), "auc", std::move(summary));
  return emit(path, doc, tables);
}

// ---------------------------------------------------------------- summary

namespace {

std::string join(const json& arr) {
  std::ostringstream out;
  out << "[";
  for (std::size_t i = 0; i < arr.size(); ++i) {
    out << (i ? ", " : "");
    if (arr[i].is_number_float()) {
      out << format_double(arr[i].get<double>());
    } else {
      out << arr[i].dump();
    }
  }
  out << "]";
  return out.str();
}

}  // namespace

std::string summarize_report(const json& doc) {
  if (doc.value("kind", "") != "report") throw FileError("not a report document");
  if (doc.value("format_version", -1) != kFormatVersion) {
    throw VersionMismatch("report format_version " + std::to_string(doc.value("format_version", -1)));
  }
  std::ostringstream out;
  const std::string experiment = doc.value("experiment", "");
  out << "experiment: " << experiment << "\n";
  out << "config_hash: " << doc.value("config_hash", "") << "\n";
  out << "seed: " << doc.value("seed", json(nullptr)).dump() << "\n";
  try {
    if (experiment == "convergence") {
      for (const auto& s : doc.at("series")) {
        out << "\npattern " << s.at("pattern").at("label").get<std::string>() << "\n";
        out << "  exact " << join(s.at("exact")) << "\n";
        for (const auto& st : s.at("steps")) {
          out << "  K=" << st.at("permutations").get<std::uint64_t>() << "  std " << join(st.at("std")) << "\n";
        }
        out << "  std ratio per quadrupling " << join(s.at("quadrupling_ratio")) << "\n";
      }
    } else if (experiment == "dummy") {
      out << "rho: " << format_double(doc.at("config").at("rho").get<double>()) << "\n";
      out << "interventional " << join(doc.at("interventional")) << "\n";
      out << "observational  " << join(doc.at("observational")) << "\n";
    } else if (experiment == "recourse") {
      out << "individuals: " << doc.at("individuals").get<std::size_t>() << "\n";
      for (const auto& c : doc.at("curves")) {
        out << c.at("ranking").get<std::string>() << " mean delta " << join(c.at("mean_delta")) << "\n";
      }
    } else if (experiment == "recovery") {
      out << "runs: " << doc.at("runs").size() << "\n";
      for (const auto& [key, value] : doc.at("mean_auc").items()) {
        out << "mean AUC " << key << " " << format_double(value.get<double>()) << "\n";
      }
      out << "random AUC " << format_double(doc.at("random_auc").get<double>()) << "\n";
    } else {
      throw FileError("unknown experiment '" + experiment + "'");
    }
  } catch (const json::exception& e) {
    throw FileError(std::string("malformed report: ") + e.what());
  }
  return out.str();
}

}  // namespace linshap::io
