#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "linshap/distribution.hpp"
#include "linshap/gaussian.hpp"
#include "linshap/transforms.hpp"

namespace linshap::io {

inline constexpr int kFormatVersion = 1;

// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

// SHA-256 of the compact JSON text of `config`.
std::string config_hash(const nlohmann::json& config);

// Writes through a sibling temporary file and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

// ---------------------------------------------------------------- CSV

// First non-comment line holds column names; every later non-comment line is
// one sample. Lines starting with '#' are skipped. Errors report the physical
// 1-based line and column.
DataMatrix parse_csv(std::istream& in);
DataMatrix ingest_csv(const std::filesystem::path& path);

// Free-form table; cells are written verbatim.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// Emits "# linshap format_version=1 config_hash=<hash>" before the header.
std::string render_csv(const CsvTable& table, const std::string& config_hash);
void write_csv(const std::filesystem::path& path, const CsvTable& table,
               const std::string& config_hash);

// Removes one column by name and returns it.
Eigen::VectorXd take_column(DataMatrix& data, const std::string& name);

// ---------------------------------------------------------------- models and specs

struct ModelFile {
  LinearModel model;
  std::vector<std::string> feature_names;
  std::optional<Standardization> standardization;  // applied to inputs before the model
  nlohmann::json config;   // effective settings of the producing run
  nlohmann::json summary;  // outcome details (penalty used, convergence); not hashed
};

struct SpecFile {
  GaussianSpec spec;
  std::vector<std::string> feature_names;
  std::optional<Standardization> standardization;
  nlohmann::json config;
  nlohmann::json summary;
};

nlohmann::json model_to_json(const ModelFile& file);
ModelFile model_from_json(const nlohmann::json& doc);
void save_model(const std::filesystem::path& path, const ModelFile& file);
ModelFile load_model(const std::filesystem::path& path);

nlohmann::json spec_to_json(const SpecFile& file);
// Throws FingerprintMismatch when the stored fingerprint disagrees with the contents.
SpecFile spec_from_json(const nlohmann::json& doc);
void save_spec(const std::filesystem::path& path, const SpecFile& file);
SpecFile load_spec(const std::filesystem::path& path);

// ---------------------------------------------------------------- tensors

// One JSON header line, then for each feature i the row-major N x N matrices
// mean_transform[i] and x_transform[i] as little-endian IEEE-754 doubles.
std::string encode_tensor(const TransformTensor& tensor, const nlohmann::json& config = {});
TransformTensor decode_tensor(const std::string& bytes, const GaussianSpec* expected = nullptr);

void persist_tensor(const TransformTensor& tensor, const std::filesystem::path& path,
                    const nlohmann::json& config = {});
// With `expected`, the tensor must have been built for that distribution.
TransformTensor load_tensor(const std::filesystem::path& path, const GaussianSpec* expected = nullptr);

// Parses the header line only.
nlohmann::json read_tensor_header(const std::filesystem::path& path);

}  // namespace linshap::io
