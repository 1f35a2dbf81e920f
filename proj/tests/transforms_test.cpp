#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "linshap/attribution.hpp"
#include "linshap/error.hpp"
#include "linshap/transforms.hpp"
#include "oracles.hpp"

namespace linshap {
namespace {

double telescoping_error(const std::vector<Eigen::MatrixXd>& family, double sign) {
  const auto n = family.front().rows();
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(n, n);
  for (const auto& m : family) total += m;
  return (total - sign * Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
}

TEST(ExactTransformsTest, IdentityCovarianceSelectsEachFeature) {
  for (int n : {1, 3, 6}) {
    const GaussianSpec spec(Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Identity(n, n));
    const TransformTensor t = exact_transforms(spec);
    ASSERT_EQ(t.dim(), static_cast<std::size_t>(n));
    EXPECT_EQ(t.mode, TransformMode::kExact);
    EXPECT_EQ(t.permutation_count, 0U);
    EXPECT_FALSE(t.seed.has_value());
    for (int i = 0; i < n; ++i) {
      Eigen::MatrixXd select = Eigen::MatrixXd::Zero(n, n);
      select(i, i) = 1.0;
      EXPECT_LT((t.x_transform[i] - select).cwiseAbs().maxCoeff(), 1e-14);
      EXPECT_LT((t.mean_transform[i] + select).cwiseAbs().maxCoeff(), 1e-14);
    }
  }
}

TEST(ExactTransformsTest, TelescopesForRandomCovariance) {
  std::mt19937_64 rng(5);
  const GaussianSpec spec(oracle::random_vector(6, rng), oracle::random_psd(6, rng));
  const TransformTensor t = exact_transforms(spec);
  EXPECT_LT(telescoping_error(t.x_transform, 1.0), 1e-8);
  EXPECT_LT(telescoping_error(t.mean_transform, -1.0), 1e-8);
}

TEST(ExactTransformsTest, RecomputationIsBitIdentical) {
  std::mt19937_64 rng(8);
  const GaussianSpec spec(oracle::random_vector(5, rng), oracle::random_psd(5, rng));
  const TransformTensor a = exact_transforms(spec);
  const TransformTensor b = exact_transforms(spec);
  for (std::size_t i = 0; i < a.dim(); ++i) {
    EXPECT_TRUE((a.x_transform[i].array() == b.x_transform[i].array()).all());
    EXPECT_TRUE((a.mean_transform[i].array() == b.mean_transform[i].array()).all());
  }
}

TEST(ExactTransformsTest, WorkersAgreeWithSerial) {
  std::mt19937_64 rng(9);
  const GaussianSpec spec(oracle::random_vector(7, rng), oracle::random_psd(7, rng));
  ExactOptions parallel;
  parallel.workers = 3;
  const TransformTensor serial = exact_transforms(spec);
  const TransformTensor split = exact_transforms(spec, parallel);
  const TransformTensor split_again = exact_transforms(spec, parallel);
  for (std::size_t i = 0; i < serial.dim(); ++i) {
    EXPECT_LT((serial.x_transform[i] - split.x_transform[i]).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_TRUE((split.x_transform[i].array() == split_again.x_transform[i].array()).all());
  }
}

TEST(ExactTransformsTest, CapIsEnforced) {
  const GaussianSpec spec(Eigen::VectorXd::Zero(4), Eigen::MatrixXd::Identity(4, 4));
  ExactOptions options;
  options.cap = 3;
  EXPECT_THROW(exact_transforms(spec, options), CapExceeded);
  options.allow_above_cap = true;
  EXPECT_NO_THROW(exact_transforms(spec, options));
}

TEST(ExactTransformsTest, ConstantColumnSurvivesThroughRidge) {
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(4, 4);
  sigma(0, 1) = sigma(1, 0) = 0.6;
  sigma(3, 3) = 0.0;
  const GaussianSpec spec(Eigen::VectorXd::Zero(4), sigma);
  const TransformTensor t = exact_transforms(spec);
  EXPECT_GT(t.ridge_count, 0U);
  EXPECT_LT(telescoping_error(t.x_transform, 1.0), 1e-8);
  for (const auto& m : t.x_transform) EXPECT_TRUE(m.allFinite());

  ExactOptions strict;
  strict.solve.ridge_fallback = false;
  EXPECT_THROW(exact_transforms(spec, strict), SingularSubmatrix);
}

TEST(SampledTransformsTest, IndependenceHasNoVariance) {
  const GaussianSpec spec(Eigen::VectorXd::Zero(4), Eigen::MatrixXd::Identity(4, 4));
  const TransformTensor exact = exact_transforms(spec);
  for (std::uint64_t seed : {1ULL, 2ULL, 99ULL}) {
    SampledOptions options;
    options.permutations = 1;
    options.seed = seed;
    const TransformTensor sampled = sampled_transforms(spec, options);
    EXPECT_EQ(sampled.mode, TransformMode::kSampled);
    EXPECT_EQ(sampled.seed, seed);
    for (std::size_t i = 0; i < 4; ++i) {
      EXPECT_LT((sampled.x_transform[i] - exact.x_transform[i]).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_LT((sampled.mean_transform[i] - exact.mean_transform[i]).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(SampledTransformsTest, TelescopesAtSinglePermutation) {
  std::mt19937_64 rng(21);
  const GaussianSpec spec(oracle::random_vector(6, rng), oracle::random_psd(6, rng));
  for (bool antithetic : {false, true}) {
    SampledOptions options;
    options.permutations = 1;
    options.seed = 4;
    options.antithetic = antithetic;
    const TransformTensor t = sampled_transforms(spec, options);
    EXPECT_EQ(t.permutation_count, antithetic ? 2U : 1U);
    EXPECT_LT(telescoping_error(t.x_transform, 1.0), 1e-8);
    EXPECT_LT(telescoping_error(t.mean_transform, -1.0), 1e-8);
  }
}

TEST(SampledTransformsTest, DeterministicPerSeed) {
  std::mt19937_64 rng(22);
  const GaussianSpec spec(oracle::random_vector(5, rng), oracle::random_psd(5, rng));
  SampledOptions options;
  options.permutations = 50;
  options.seed = 17;
  const TransformTensor a = sampled_transforms(spec, options);
  const TransformTensor b = sampled_transforms(spec, options);
  options.seed = 18;
  const TransformTensor c = sampled_transforms(spec, options);
  bool any_diff = false;
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_TRUE((a.x_transform[i].array() == b.x_transform[i].array()).all());
    any_diff |= (a.x_transform[i].array() != c.x_transform[i].array()).any();
  }
  EXPECT_TRUE(any_diff);
}

TEST(SampledTransformsTest, ConvergesToExact) {
  std::mt19937_64 rng(23);
  const GaussianSpec spec(oracle::random_vector(4, rng), oracle::random_psd(4, rng));
  const TransformTensor exact = exact_transforms(spec);
  SampledOptions options;
  options.permutations = 20'000;
  options.seed = 3;
  const TransformTensor sampled = sampled_transforms(spec, options);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_LT((sampled.x_transform[i] - exact.x_transform[i]).cwiseAbs().maxCoeff(), 0.05);
  }
}

TEST(SampledTransformsTest, ChainMatchesDirectSolvesUnderWorkers) {
  std::mt19937_64 rng(24);
  const GaussianSpec spec(oracle::random_vector(6, rng), oracle::random_psd(6, rng));
  SampledOptions options;
  options.permutations = 40;
  options.seed = 5;
  const TransformTensor serial = sampled_transforms(spec, options);
  options.workers = 4;
  const TransformTensor split = sampled_transforms(spec, options);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_LT((serial.x_transform[i] - split.x_transform[i]).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(SampledTransformsTest, AntitheticKeepsExpectationForThreeFeatures) {
  // With 3 features, an ordering and its reverse cover complementary prefix
  // chains; averaging over all 6 orderings is the exact answer, so a large
  // antithetic sample must converge to it as well.
  const GaussianSpec spec(Eigen::VectorXd::Zero(3), oracle::pair_covariance(0.8));
  const TransformTensor exact = exact_transforms(spec);
  SampledOptions options;
  options.permutations = 20'000;
  options.seed = 8;
  options.antithetic = true;
  const TransformTensor t = sampled_transforms(spec, options);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_LT((t.x_transform[i] - exact.x_transform[i]).cwiseAbs().maxCoeff(), 0.02);
  }
}

TEST(SampledTransformsTest, RejectsZeroPermutations) {
  const GaussianSpec spec(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2));
  SampledOptions options;
  options.permutations = 0;
  EXPECT_THROW(sampled_transforms(spec, options), InvalidArgument);
}

}  // namespace
}  // namespace linshap
