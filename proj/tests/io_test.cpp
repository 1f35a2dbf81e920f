#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "linshap/error.hpp"
#include "linshap/io.hpp"
#include "linshap/transforms.hpp"
#include "oracles.hpp"

namespace linshap {
namespace {

namespace fs = std::filesystem;

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("linshap_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path path(const std::string& name) const { return dir_ / name; }
  void write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name), std::ios::binary) << text;
  }
  fs::path dir_;
};

bool bitwise_equal(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

GaussianSpec random_spec(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return GaussianSpec(oracle::random_vector(n, rng), oracle::random_psd(n, rng));
}

TEST(FormatDoubleTest, RoundTripsExactly) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) / 3.0;
    EXPECT_EQ(std::stod(io::format_double(v)), v);
  }
  EXPECT_EQ(io::format_double(0.1), "0.1");
}

TEST(CsvTest, SmallFileRoundTrips) {
  std::istringstream in("a,b\n1.5,-2\n3,4e-3\n");
  const DataMatrix d = io::parse_csv(in);
  ASSERT_EQ(d.rows(), 2U);
  ASSERT_EQ(d.cols(), 2U);
  EXPECT_EQ(d.column_names, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(d.values(0, 0), 1.5);
  EXPECT_EQ(d.values(1, 1), 4e-3);

  io::CsvTable t{d.column_names, {}};
  for (Eigen::Index r = 0; r < d.values.rows(); ++r) {
    t.rows.push_back({io::format_double(d.values(r, 0)), io::format_double(d.values(r, 1))});
  }
  std::istringstream back(io::render_csv(t, "abc"));
  const DataMatrix again = io::parse_csv(back);
  EXPECT_EQ(again.column_names, d.column_names);
  EXPECT_TRUE(bitwise_equal(again.values, d.values));
}

TEST(CsvTest, CommentAndQuotedHeader) {
  std::istringstream in("# produced elsewhere\n\"x 1\", y\n\n1, 2\n");
  const DataMatrix d = io::parse_csv(in);
  EXPECT_EQ(d.column_names, (std::vector<std::string>{"x 1", "y"}));
  EXPECT_EQ(d.values(0, 1), 2.0);
}

TEST(CsvTest, HeaderOnlyIsEmpty) {
  std::istringstream header_only("a,b\n");
  EXPECT_THROW(io::parse_csv(header_only), EmptyFile);
  std::istringstream nothing("");
  EXPECT_THROW(io::parse_csv(nothing), EmptyFile);
}

TEST(CsvTest, BadCellReportsRowAndColumn) {
  std::istringstream in("a,b\n1,2\n3,abc\n");
  try {
    io::parse_csv(in);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 3U);
    EXPECT_EQ(e.col(), 2U);
  }
}

TEST(CsvTest, NonFiniteAndRaggedRowsRejected) {
  for (const char* text : {"a,b\n1,nan\n", "a,b\n1,inf\n", "a,b\n1,-inf\n"}) {
    std::istringstream in(text);
    try {
      io::parse_csv(in);
      FAIL() << text;
    } catch (const ParseError& e) {
      EXPECT_EQ(e.row(), 2U);
      EXPECT_EQ(e.col(), 2U);
    }
  }
  std::istringstream ragged("a,b\n1,2,3\n");
  EXPECT_THROW(io::parse_csv(ragged), ParseError);
}

TEST_F(TempDir, IngestMissingFile) {
  EXPECT_THROW(io::ingest_csv(path("nope.csv")), FileError);
}

TEST(CsvTest, TakeColumn) {
  std::istringstream in("a,y,b\n1,2,3\n4,5,6\n");
  DataMatrix d = io::parse_csv(in);
  const Eigen::VectorXd y = io::take_column(d, "y");
  EXPECT_EQ(y, Eigen::Vector2d(2, 5));
  EXPECT_EQ(d.column_names, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(d.values, (Eigen::MatrixXd(2, 2) << 1, 3, 4, 6).finished());
  EXPECT_THROW(io::take_column(d, "y"), DimensionMismatch);
}

TEST_F(TempDir, WriteAtomicLeavesNoTemporary) {
  io::write_atomic(path("f.txt"), "one");
  io::write_atomic(path("f.txt"), "two");
  EXPECT_EQ(io::read_file(path("f.txt")), "two");
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir_)) ++entries;
  EXPECT_EQ(entries, 1U);
}

TEST_F(TempDir, TensorRoundTripIsBitExact) {
  const GaussianSpec spec = random_spec(5, 11);
  for (const TransformTensor& t :
       {exact_transforms(spec), sampled_transforms(spec, {37, 9, true, {}, 1})}) {
    io::persist_tensor(t, path("t.bin"), {{"note", "x"}});
    const TransformTensor back = io::load_tensor(path("t.bin"), &spec);
    ASSERT_EQ(back.dim(), t.dim());
    for (std::size_t i = 0; i < t.dim(); ++i) {
      EXPECT_TRUE(bitwise_equal(back.mean_transform[i], t.mean_transform[i]));
      EXPECT_TRUE(bitwise_equal(back.x_transform[i], t.x_transform[i]));
    }
    EXPECT_EQ(back.mode, t.mode);
    EXPECT_EQ(back.seed, t.seed);
    EXPECT_EQ(back.permutation_count, t.permutation_count);
    EXPECT_EQ(back.antithetic, t.antithetic);
    EXPECT_EQ(back.ridge_count, t.ridge_count);
    EXPECT_EQ(back.distribution_fingerprint, spec.fingerprint());

    const auto header = io::read_tensor_header(path("t.bin"));
    EXPECT_EQ(header.at("byte_order"), "little");
    EXPECT_EQ(header.at("format_version"), io::kFormatVersion);
    EXPECT_EQ(header.at("config_hash"), io::config_hash({{"note", "x"}}));
  }
}

TEST_F(TempDir, PayloadIsRowMajorLittleEndian) {
  const GaussianSpec spec(Eigen::Vector2d(0, 0), (Eigen::Matrix2d() << 1, 0.5, 0.5, 1).finished());
  const TransformTensor t = exact_transforms(spec);
  const std::string bytes = io::encode_tensor(t);
  const std::size_t start = bytes.find('\n') + 1;
  ASSERT_EQ(bytes.size() - start, 2U * 2U * 4U * 8U);
  // Feature 0's x_transform follows its mean_transform; entry (0, 1) is the second double.
  unsigned char raw[8];
  for (int b = 0; b < 8; ++b) raw[b] = static_cast<unsigned char>(bytes[start + 4 * 8 + 8 + b]);
  std::uint64_t bits = 0;
  for (int b = 7; b >= 0; --b) bits = (bits << 8) | raw[b];
  EXPECT_EQ(std::bit_cast<double>(bits), t.x_transform[0](0, 1));
}

TEST_F(TempDir, TensorForOtherSpecRejected) {
  const GaussianSpec spec = random_spec(4, 2);
  io::persist_tensor(exact_transforms(spec), path("t.bin"));
  Eigen::MatrixXd cov = spec.covariance();
  cov(0, 0) += 1e-9;
  const GaussianSpec perturbed(spec.mean(), cov);
  EXPECT_THROW(io::load_tensor(path("t.bin"), &perturbed), FingerprintMismatch);
  EXPECT_NO_THROW(io::load_tensor(path("t.bin")));
}

TEST_F(TempDir, TruncatedTensorRejected) {
  const std::string bytes = io::encode_tensor(exact_transforms(random_spec(3, 4)));
  write("cut.bin", bytes.substr(0, bytes.size() - 1));
  EXPECT_THROW(io::load_tensor(path("cut.bin")), TruncatedFile);
  write("head.bin", bytes.substr(0, 20));
  EXPECT_THROW(io::load_tensor(path("head.bin")), TruncatedFile);
  write("long.bin", bytes + "x");
  EXPECT_THROW(io::load_tensor(path("long.bin")), FileError);
}

TEST_F(TempDir, TensorVersionChecked) {
  std::string bytes = io::encode_tensor(exact_transforms(random_spec(2, 4)));
  const auto pos = bytes.find("\"format_version\":1");
  ASSERT_NE(pos, std::string::npos);
  bytes.replace(pos, 18, "\"format_version\":7");
  write("v.bin", bytes);
  EXPECT_THROW(io::load_tensor(path("v.bin")), VersionMismatch);
}

TEST_F(TempDir, ModelRoundTrip) {
  io::ModelFile m;
  m.model.coefficients = Eigen::Vector3d(0.1, -2.0 / 3.0, 1e-300);
  m.model.intercept = -0.7;
  m.model.link = Link::kLogitMargin;
  m.feature_names = {"a", "b", "c"};
  m.standardization = Standardization{Eigen::Vector3d(1, 2, 3), Eigen::Vector3d(0.5, 1, 2)};
  m.config = {{"penalty", 0.2}};
  m.summary = {{"converged", true}};
  io::save_model(path("m.json"), m);
  const io::ModelFile back = io::load_model(path("m.json"));
  EXPECT_TRUE(bitwise_equal(back.model.coefficients, m.model.coefficients));
  EXPECT_EQ(back.model.intercept, m.model.intercept);
  EXPECT_EQ(back.model.link, Link::kLogitMargin);
  EXPECT_EQ(back.feature_names, m.feature_names);
  ASSERT_TRUE(back.standardization.has_value());
  EXPECT_EQ(back.standardization->scale, m.standardization->scale);
  EXPECT_EQ(back.config, m.config);
  EXPECT_EQ(back.summary, m.summary);

  const auto doc = nlohmann::json::parse(io::read_file(path("m.json")));
  EXPECT_EQ(doc.at("format_version"), io::kFormatVersion);
  EXPECT_EQ(doc.at("config_hash"), io::config_hash(m.config));
}

TEST_F(TempDir, SpecRoundTripAndTamperCheck) {
  io::SpecFile s{random_spec(4, 8), {"a", "b", "c", "d"}, std::nullopt, {{"k", 1}}, {}};
  io::save_spec(path("s.json"), s);
  const io::SpecFile back = io::load_spec(path("s.json"));
  EXPECT_EQ(back.spec.fingerprint(), s.spec.fingerprint());
  EXPECT_TRUE(bitwise_equal(back.spec.covariance(), s.spec.covariance()));
  EXPECT_FALSE(back.standardization.has_value());

  auto doc = nlohmann::json::parse(io::read_file(path("s.json")));
  doc["mean"][0] = doc["mean"][0].get<double>() + 1.0;
  io::write_atomic(path("bad.json"), doc.dump());
  EXPECT_THROW(io::load_spec(path("bad.json")), FingerprintMismatch);

  doc = nlohmann::json::parse(io::read_file(path("s.json")));
  doc["format_version"] = 2;
  io::write_atomic(path("v.json"), doc.dump());
  EXPECT_THROW(io::load_spec(path("v.json")), VersionMismatch);
  EXPECT_THROW(io::load_model(path("s.json")), FileError);
}

}  // namespace
}  // namespace linshap
