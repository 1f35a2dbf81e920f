#include "linshap/gaussian.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <vector>

#include "linshap/digest.hpp"
#include "linshap/error.hpp"

namespace linshap {

namespace {

void append_le(std::vector<unsigned char>& out, std::uint64_t word) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<unsigned char>((word >> (8 * b)) & 0xFFU));
}

void append_le(std::vector<unsigned char>& out, double value) {
  append_le(out, std::bit_cast<std::uint64_t>(value));
}

}  // namespace

GaussianSpec::GaussianSpec(Eigen::VectorXd mean, Eigen::MatrixXd covariance)
    : mean_(std::move(mean)), covariance_(std::move(covariance)) {
  const Eigen::Index n = mean_.size();
  if (covariance_.rows() != covariance_.cols()) {
    throw InvalidDistribution("covariance is not square");
  }
  if (covariance_.rows() != n) {
    throw DimensionMismatch("mean has length " + std::to_string(n) + " but covariance is " +
                            std::to_string(covariance_.rows()) + "x" +
                            std::to_string(covariance_.cols()));
  }
  if (!mean_.allFinite() || !covariance_.allFinite()) {
    throw NonFiniteInput("distribution contains non-finite values");
  }
  if (n == 0) return;
  const double asym = (covariance_ - covariance_.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTolerance) {
    throw InvalidDistribution("covariance asymmetry " + std::to_string(asym) + " exceeds tolerance");
  }
  const double max_diag = covariance_.diagonal().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(covariance_, Eigen::EigenvaluesOnly);
  const double min_eig = eig.eigenvalues().minCoeff();
  if (min_eig < -kPsdRelativeTolerance * std::max(max_diag, 0.0)) {
    throw NotPSD("covariance has eigenvalue " + std::to_string(min_eig));
  }
}

std::string GaussianSpec::fingerprint() const {
  std::vector<unsigned char> bytes;
  const auto n = static_cast<std::uint64_t>(dim());
  bytes.reserve(8 * (1 + n + n * n));
  append_le(bytes, n);
  for (Eigen::Index i = 0; i < mean_.size(); ++i) append_le(bytes, mean_(i));
  for (Eigen::Index r = 0; r < covariance_.rows(); ++r) {
    for (Eigen::Index c = 0; c < covariance_.cols(); ++c) append_le(bytes, covariance_(r, c));
  }
  return sha256_hex(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

double LinearModel::margin(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  check_length(dim(), x.size(), "sample");
  return coefficients.dot(x) + intercept;
}

void check_dimensions(const LinearModel& model, const GaussianSpec& spec) {
  if (model.dim() != spec.dim()) {
    throw DimensionMismatch("model has " + std::to_string(model.dim()) +
                            " coefficients but distribution has dimension " +
                            std::to_string(spec.dim()));
  }
}

void check_length(std::size_t expected, Eigen::Index actual, const char* what) {
  if (static_cast<std::size_t>(actual) != expected) {
    throw DimensionMismatch(std::string(what) + " has length " + std::to_string(actual) +
                            ", expected " + std::to_string(expected));
  }
}

}  // namespace linshap
