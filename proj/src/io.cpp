#include "linshap/io.hpp"

#include <unistd.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <system_error>

#include "linshap/digest.hpp"
#include "linshap/error.hpp"

namespace linshap::io {

using nlohmann::json;

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::string config_hash(const json& config) { return sha256_hex(config.dump()); }

void write_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FileError("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw FileError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw FileError("cannot move output into place at " + path.string());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// ---------------------------------------------------------------- CSV

namespace {

std::string trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return std::string(s);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

bool skip_line(const std::string& line) {
  const std::string t = trim(line);
  return t.empty() || t.front() == '#';
}

std::string unquote(std::string s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

}  // namespace

DataMatrix parse_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> names;
  while (std::getline(in, line)) {
    ++line_no;
    if (skip_line(line)) continue;
    for (auto& f : split_fields(line)) names.push_back(unquote(f));
    break;
  }
  if (names.empty()) throw EmptyFile("no header row");

  std::vector<double> cells;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (skip_line(line)) continue;
    const auto fields = split_fields(line);
    if (fields.size() != names.size()) {
      throw ParseError(line_no, std::min(fields.size(), names.size()) + 1,
                       "expected " + std::to_string(names.size()) + " fields, found " +
                           std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const std::string& f = fields[c];
      double v = 0.0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (f.empty() || res.ec != std::errc() || res.ptr != f.data() + f.size()) {
        throw ParseError(line_no, c + 1, "not a number: '" + f + "'");
      }
      if (!std::isfinite(v)) throw ParseError(line_no, c + 1, "non-finite value '" + f + "'");
      cells.push_back(v);
    }
    ++rows;
  }
  if (rows == 0) throw EmptyFile("header but no data rows");

  DataMatrix out;
  out.column_names = std::move(names);
  const auto n = static_cast<Eigen::Index>(out.column_names.size());
  out.values.resize(static_cast<Eigen::Index>(rows), n);
  for (std::size_t r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < n; ++c)
      out.values(static_cast<Eigen::Index>(r), c) = cells[r * static_cast<std::size_t>(n) + static_cast<std::size_t>(c)];
  return out;
}

DataMatrix ingest_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open " + path.string());
  return parse_csv(in);
}

std::string render_csv(const CsvTable& table, const std::string& hash) {
  std::ostringstream out;
  out << "# linshap format_version=" << kFormatVersion << " config_hash=" << hash << '\n';
  const auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  };
  line(table.header);
  for (const auto& row : table.rows) line(row);
  return out.str();
}

void write_csv(const std::filesystem::path& path, const CsvTable& table, const std::string& hash) {
  write_atomic(path, render_csv(table, hash));
}

Eigen::VectorXd take_column(DataMatrix& data, const std::string& name) {
  const auto it = std::find(data.column_names.begin(), data.column_names.end(), name);
  if (it == data.column_names.end()) throw DimensionMismatch("no column named '" + name + "'");
  const auto c = static_cast<Eigen::Index>(it - data.column_names.begin());
  Eigen::VectorXd col = data.values.col(c);
  Eigen::MatrixXd rest(data.values.rows(), data.values.cols() - 1);
  rest << data.values.leftCols(c), data.values.rightCols(data.values.cols() - c - 1);
  data.values = std::move(rest);
  data.column_names.erase(it);
  return col;
}

// ---------------------------------------------------------------- models and specs

namespace {

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd json_vector(const json& j, const char* what) {
  if (!j.is_array()) throw FileError(std::string(what) + " must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw FileError(std::string(what) + " must hold numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

void check_header(const json& doc, const char* kind) {
  if (!doc.is_object() || doc.value("kind", "") != kind) {
    throw FileError(std::string("not a ") + kind + " file");
  }
  const int version = doc.value("format_version", -1);
  if (version != kFormatVersion) {
    throw VersionMismatch(std::string(kind) + " format_version " + std::to_string(version) +
                          ", expected " + std::to_string(kFormatVersion));
  }
}

json standardization_json(const std::optional<Standardization>& s) {
  if (!s) return nullptr;
  return {{"center", vector_json(s->center)}, {"scale", vector_json(s->scale)}};
}

std::optional<Standardization> json_standardization(const json& j) {
  if (j.is_null()) return std::nullopt;
  Standardization s;
  s.center = json_vector(j.at("center"), "standardization.center");
  s.scale = json_vector(j.at("scale"), "standardization.scale");
  if (s.center.size() != s.scale.size()) throw DimensionMismatch("standardization lengths differ");
  return s;
}

json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FileError(source + ": " + e.what());
  }
}

template <typename F>
auto with_json_errors(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw FileError(e.what());
  }
}

}  // namespace

json model_to_json(const ModelFile& file) {
  return {{"format_version", kFormatVersion},
          {"kind", "linear_model"},
          {"config_hash", config_hash(file.config)},
          {"config", file.config},
          {"link", file.model.link == Link::kIdentity ? "identity" : "logit_margin"},
          {"intercept", file.model.intercept},
          {"coefficients", vector_json(file.model.coefficients)},
          {"feature_names", file.feature_names},
          {"standardization", standardization_json(file.standardization)},
          {"summary", file.summary}};
}

ModelFile model_from_json(const json& doc) {
  check_header(doc, "linear_model");
  return with_json_errors([&] {
    ModelFile f;
    f.config = doc.value("config", json::object());
    const std::string link = doc.at("link").get<std::string>();
    if (link != "identity" && link != "logit_margin") throw FileError("unknown link '" + link + "'");
    f.model.link = link == "identity" ? Link::kIdentity : Link::kLogitMargin;
    f.model.intercept = doc.at("intercept").get<double>();
    f.model.coefficients = json_vector(doc.at("coefficients"), "coefficients");
    f.feature_names = doc.value("feature_names", std::vector<std::string>{});
    f.standardization = json_standardization(doc.value("standardization", json()));
    f.summary = doc.value("summary", json());
    if (f.standardization && static_cast<std::size_t>(f.standardization->center.size()) != f.model.dim()) {
      throw DimensionMismatch("model standardization length");
    }
    return f;
  });
}

void save_model(const std::filesystem::path& path, const ModelFile& file) {
  write_atomic(path, model_to_json(file).dump(2) + "\n");
}

ModelFile load_model(const std::filesystem::path& path) {
  return model_from_json(parse_json(read_file(path), path.string()));
}

json spec_to_json(const SpecFile& file) {
  json cov = json::array();
  const Eigen::MatrixXd& c = file.spec.covariance();
  for (Eigen::Index r = 0; r < c.rows(); ++r) cov.push_back(vector_json(c.row(r).transpose()));
  return {{"format_version", kFormatVersion},
          {"kind", "gaussian_spec"},
          {"config_hash", config_hash(file.config)},
          {"config", file.config},
          {"dim", file.spec.dim()},
          {"fingerprint", file.spec.fingerprint()},
          {"mean", vector_json(file.spec.mean())},
          {"covariance", cov},
          {"feature_names", file.feature_names},
          {"standardization", standardization_json(file.standardization)},
          {"summary", file.summary}};
}

SpecFile spec_from_json(const json& doc) {
  check_header(doc, "gaussian_spec");
  return with_json_errors([&] {
    const Eigen::VectorXd mean = json_vector(doc.at("mean"), "mean");
    const json& rows = doc.at("covariance");
    if (!rows.is_array() || rows.size() != static_cast<std::size_t>(mean.size())) {
      throw DimensionMismatch("covariance must have one row per mean entry");
    }
    Eigen::MatrixXd cov(mean.size(), mean.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const Eigen::VectorXd row = json_vector(rows[r], "covariance row");
      if (row.size() != mean.size()) throw DimensionMismatch("covariance row length");
      cov.row(static_cast<Eigen::Index>(r)) = row.transpose();
    }
    SpecFile f{GaussianSpec(mean, cov), doc.value("feature_names", std::vector<std::string>{}),
               json_standardization(doc.value("standardization", json())),
               doc.value("config", json::object()), doc.value("summary", json())};
    const std::string stored = doc.value("fingerprint", "");
    if (!stored.empty() && stored != f.spec.fingerprint()) {
      throw FingerprintMismatch("stored fingerprint does not match the spec contents");
    }
    return f;
  });
}

void save_spec(const std::filesystem::path& path, const SpecFile& file) {
  write_atomic(path, spec_to_json(file).dump(2) + "\n");
}

SpecFile load_spec(const std::filesystem::path& path) {
  return spec_from_json(parse_json(read_file(path), path.string()));
}

// ---------------------------------------------------------------- tensors

namespace {

void put_le(std::string& out, double value) {
  const auto word = std::bit_cast<std::uint64_t>(value);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((word >> (8 * b)) & 0xFFU));
}

double get_le(const char* p) {
  std::uint64_t word = 0;
  for (int b = 0; b < 8; ++b) word |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[b])) << (8 * b);
  return std::bit_cast<double>(word);
}

json tensor_header(const TransformTensor& t, const json& config) {
  return {{"format_version", kFormatVersion},
          {"kind", "transform_tensor"},
          {"dim", t.dim()},
          {"mode", t.mode == TransformMode::kExact ? "exact" : "sampled"},
          {"seed", t.seed ? json(*t.seed) : json(nullptr)},
          {"permutation_count", t.permutation_count},
          {"antithetic", t.antithetic},
          {"distribution_fingerprint", t.distribution_fingerprint},
          {"ridge_count", t.ridge_count},
          {"byte_order", "little"},
          {"config_hash", config_hash(config)},
          {"config", config}};
}

}  // namespace

std::string encode_tensor(const TransformTensor& tensor, const json& config) {
  const std::size_t n = tensor.dim();
  if (tensor.mean_transform.size() != n) throw DimensionMismatch("tensor families differ in length");
  std::string out = tensor_header(tensor, config).dump();
  out.push_back('\n');
  out.reserve(out.size() + 16 * n * n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const Eigen::MatrixXd* m : {&tensor.mean_transform[i], &tensor.x_transform[i]}) {
      if (static_cast<std::size_t>(m->rows()) != n || static_cast<std::size_t>(m->cols()) != n) {
        throw DimensionMismatch("tensor matrix shape");
      }
      for (Eigen::Index r = 0; r < m->rows(); ++r)
        for (Eigen::Index c = 0; c < m->cols(); ++c) put_le(out, (*m)(r, c));
    }
  }
  return out;
}

TransformTensor decode_tensor(const std::string& bytes, const GaussianSpec* expected) {
  const std::size_t newline = bytes.find('\n');
  if (newline == std::string::npos) throw TruncatedFile("tensor header line is incomplete");
  const json header = parse_json(bytes.substr(0, newline), "tensor header");
  check_header(header, "transform_tensor");
  return with_json_errors([&] {
    if (header.at("byte_order").get<std::string>() != "little") {
      throw FileError("unsupported byte order");
    }
    const auto n = header.at("dim").get<std::size_t>();
    const std::size_t need = 16 * n * n * n;
    const std::size_t have = bytes.size() - newline - 1;
    if (have < need) {
      throw TruncatedFile("payload has " + std::to_string(have) + " bytes, header implies " +
                          std::to_string(need));
    }
    if (have > need) throw FileError("payload has trailing bytes");

    TransformTensor t;
    const std::string mode = header.at("mode").get<std::string>();
    if (mode != "exact" && mode != "sampled") throw FileError("unknown tensor mode '" + mode + "'");
    t.mode = mode == "exact" ? TransformMode::kExact : TransformMode::kSampled;
    if (!header.at("seed").is_null()) t.seed = header.at("seed").get<std::uint64_t>();
    t.permutation_count = header.at("permutation_count").get<std::uint64_t>();
    t.antithetic = header.at("antithetic").get<bool>();
    t.distribution_fingerprint = header.at("distribution_fingerprint").get<std::string>();
    t.ridge_count = header.at("ridge_count").get<std::uint64_t>();
    if (expected && expected->fingerprint() != t.distribution_fingerprint) {
      throw FingerprintMismatch("tensor was built for a different distribution");
    }

    const char* p = bytes.data() + newline + 1;
    const auto dn = static_cast<Eigen::Index>(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto* family : {&t.mean_transform, &t.x_transform}) {
        Eigen::MatrixXd m(dn, dn);
        for (Eigen::Index r = 0; r < dn; ++r)
          for (Eigen::Index c = 0; c < dn; ++c, p += 8) m(r, c) = get_le(p);
        family->push_back(std::move(m));
      }
    }
    return t;
  });
}

void persist_tensor(const TransformTensor& tensor, const std::filesystem::path& path,
                    const json& config) {
  write_atomic(path, encode_tensor(tensor, config));
}

TransformTensor load_tensor(const std::filesystem::path& path, const GaussianSpec* expected) {
  return decode_tensor(read_file(path), expected);
}

json read_tensor_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || in.eof()) throw TruncatedFile("tensor header line is incomplete");
  return parse_json(line, path.string());
}

}  // namespace linshap::io
