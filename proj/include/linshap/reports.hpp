#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "linshap/experiments.hpp"

namespace linshap::io {

// Each experiment report is one JSON document carrying its full config,
// config hash and seed, plus sibling CSV files named <stem>_<part>.csv.
nlohmann::json convergence_config_json(const ConvergenceConfig& config);
nlohmann::json recourse_config_json(const RecourseStudyConfig& config);
nlohmann::json recovery_config_json(const RecoveryConfig& config);

nlohmann::json report_json(const ConvergenceReport& report);
nlohmann::json report_json(const DummyFeatureReport& report);
nlohmann::json report_json(const RecourseStudyReport& report);
// Runs share every setting except the seed.
nlohmann::json report_json(const std::vector<RecoveryReport>& runs);

// Write the JSON document and its CSVs; return every path written.
std::vector<std::filesystem::path> write_report(const std::filesystem::path& path,
                                                const ConvergenceReport& report);
std::vector<std::filesystem::path> write_report(const std::filesystem::path& path,
                                                const DummyFeatureReport& report);
std::vector<std::filesystem::path> write_report(const std::filesystem::path& path,
                                                const RecourseStudyReport& report);
std::vector<std::filesystem::path> write_report(const std::filesystem::path& path,
                                                const std::vector<RecoveryReport>& runs);

// Human-readable summary of a report document.
std::string summarize_report(const nlohmann::json& doc);

}  // namespace linshap::io
