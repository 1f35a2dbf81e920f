#include <gtest/gtest.h>

#include <cmath>

#include "linshap/error.hpp"
#include "linshap/experiments.hpp"
#include "linshap/transforms.hpp"
#include "oracles.hpp"

namespace linshap {
namespace {

TEST(BuildCovarianceTest, Patterns) {
  EXPECT_EQ(build_covariance(CorrelationPattern::independent(3)).covariance(),
            Eigen::MatrixXd::Identity(3, 3));
  const GaussianSpec pair = build_covariance(CorrelationPattern::pair(3, 0.8, 1, 2));
  EXPECT_EQ(pair.covariance(), oracle::pair_covariance(0.8));
  EXPECT_EQ(pair.mean(), Eigen::VectorXd::Zero(3));

  const Eigen::MatrixXd equi = build_covariance(CorrelationPattern::equicorrelated(4, 0.3)).covariance();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) EXPECT_EQ(equi(i, j), i == j ? 1.0 : 0.3);

  const Eigen::MatrixXd blocks = build_covariance(CorrelationPattern::block(7, 0.9, 3)).covariance();
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 7; ++j) EXPECT_EQ(blocks(i, j), i == j ? 1.0 : (i / 3 == j / 3 ? 0.9 : 0.0));
}

TEST(BuildCovarianceTest, OutOfRangeCorrelations) {
  // Smallest eigenvalue of an equicorrelated matrix is 1 - rho, largest 1 + (N - 1) rho.
  EXPECT_THROW(build_covariance(CorrelationPattern::equicorrelated(3, -0.6)), NotPSD);
  EXPECT_NO_THROW(build_covariance(CorrelationPattern::equicorrelated(3, -0.45)));
  EXPECT_THROW(build_covariance(CorrelationPattern::pair(3, 1.0, 0, 1)), NotPSD);
  EXPECT_THROW(build_covariance(CorrelationPattern::block(8, -0.5, 4)), NotPSD);
  EXPECT_THROW(build_covariance(CorrelationPattern::pair(3, 0.5, 1, 1)), InvalidArgument);
}

TEST(SampleMvnTest, SampleCovarianceMatchesPair) {
  const GaussianSpec spec = build_covariance(CorrelationPattern::pair(3, 0.8, 1, 2));
  const DataMatrix d = sample_mvn(spec, 200'000, 1);
  const Eigen::MatrixXd c = empirical_moments(d).covariance();
  EXPECT_LT((c - spec.covariance()).cwiseAbs().maxCoeff(), 0.02);
}

TEST(SampleMvnTest, ZeroVarianceColumnIsConstantAndSeedsReproduce) {
  Eigen::MatrixXd sigma = oracle::pair_covariance(0.5);
  sigma.row(0).setZero();
  sigma.col(0).setZero();
  const GaussianSpec spec(Eigen::Vector3d(4.0, -1.0, 2.0), sigma);
  const DataMatrix a = sample_mvn(spec, 500, 9);
  EXPECT_TRUE((a.values.col(0).array() == 4.0).all());
  EXPECT_GT(column_std(a.values)(1), 0.5);
  EXPECT_EQ(sample_mvn(spec, 500, 9).values, a.values);
  EXPECT_NE(sample_mvn(spec, 500, 10).values, a.values);
}

TEST(SyntheticLabelsTest, SumOfCausalColumnsPlusScaledNoise) {
  const GaussianSpec spec = build_covariance(CorrelationPattern::block(6, 0.5, 3));
  const SyntheticLabelSpec labels = make_label_spec(spec, FeatureSubset(6, {0, 1, 4}));
  // Var(x0 + x1 + x4) = 3 + 2 * 0.5.
  EXPECT_NEAR(labels.noise_std, 0.1 * 2.0, 1e-15);
  const DataMatrix d = sample_mvn(spec, 20'000, 3);
  const Eigen::VectorXd y = synthetic_labels(d, labels, 4);
  const Eigen::VectorXd clean = d.values.col(0) + d.values.col(1) + d.values.col(4);
  const Eigen::VectorXd noise = y - clean;
  EXPECT_NEAR(std::sqrt(noise.squaredNorm() / 20'000.0), 0.2, 0.01);
  SyntheticLabelSpec silent = labels;
  silent.noise_std = 0.0;
  EXPECT_EQ(synthetic_labels(d, silent, 4), clean);
}

TEST(ConvergenceTest, DefaultStudyShapes) {
  const ConvergenceReport report = run_convergence({});
  ASSERT_EQ(report.series.size(), 3U);
  const auto& independent = report.series[0];
  EXPECT_EQ(independent.std.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_LT((independent.exact - Eigen::Vector3d(1, 2, 3)).cwiseAbs().maxCoeff(), 1e-12);

  const auto& pair = report.series[1];
  EXPECT_EQ(pair.std.col(0).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_GT(pair.std.col(1).minCoeff(), 0.0);
  EXPECT_GT(pair.std.col(2).minCoeff(), 0.0);
  EXPECT_LT((pair.exact - Eigen::Vector3d(1, 2.4, 2.6)).cwiseAbs().maxCoeff(), 1e-10);

  for (std::size_t s : {1U, 2U}) {
    for (Eigen::Index i = 0; i < 3; ++i) {
      if (s == 1 && i == 0) continue;
      EXPECT_GE(report.series[s].quadrupling_ratio(i), 1.6);
      EXPECT_LE(report.series[s].quadrupling_ratio(i), 2.5);
    }
  }
  const ConvergenceReport again = run_convergence({});
  for (std::size_t s = 0; s < 3; ++s) EXPECT_EQ(again.series[s].std, report.series[s].std);
}

TEST(ConvergenceTest, RejectsBadSchedules) {
  ConvergenceConfig cfg;
  cfg.permutation_schedule = {4, 4};
  EXPECT_THROW(run_convergence(cfg), InvalidArgument);
  cfg.permutation_schedule = {0, 4};
  EXPECT_THROW(run_convergence(cfg), InvalidArgument);
}

TEST(DummyFeatureTest, ClosedForms) {
  const DummyFeatureReport none = run_dummy_feature(0.0);
  EXPECT_LT((none.observational - Eigen::Vector2d(1, 0)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(none.interventional, Eigen::Vector2d(1, 0));
  for (double rho : {0.25, 0.5, 0.8}) {
    const DummyFeatureReport r = run_dummy_feature(rho);
    const Eigen::Vector2d expected(1 - rho / 2, rho / 2);
    EXPECT_LT((r.brute_force_observational - expected).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((r.observational - expected).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_EQ(r.interventional, Eigen::Vector2d(1, 0));
  }
}

// Six features: feature 5 is unused but correlated with feature 0.
struct SmallRecourse {
  LinearModel model{(Eigen::VectorXd(6) << 1.0, -0.8, 0.6, 0.5, 0.3, 0.0).finished(), -0.5,
                    Link::kLogitMargin};
  GaussianSpec spec = build_covariance(CorrelationPattern::pair(6, 0.8, 0, 5));
  DataMatrix data = sample_mvn(spec, 400, 21);
};

TEST(RecourseTest, InterventionalCurveIsGreedyOptimal) {
  const SmallRecourse s;
  const RecourseReport r = run_recourse(s.model, s.spec, s.data, 6);
  ASSERT_EQ(r.curves.size(), 3U);
  EXPECT_EQ(r.curves[0].ranking, "interventional");
  EXPECT_EQ(r.curves[2].ranking, "greedy_optimal");
  EXPECT_EQ(r.curves[0].mean_delta, r.curves[2].mean_delta);
  EXPECT_EQ(r.curves[0].std_delta, r.curves[2].std_delta);
  EXPECT_EQ(r.curves[0].mean_delta.size(), 6U);
  bool strict = false;
  for (std::size_t k = 0; k < 6; ++k) {
    EXPECT_LE(r.curves[0].mean_delta[k], r.curves[1].mean_delta[k]);
    strict = strict || r.curves[0].mean_delta[k] < r.curves[1].mean_delta[k] - 1e-9;
  }
  EXPECT_TRUE(strict);
  // Imputing everything returns every individual to the base margin.
  const double base = s.model.margin(s.spec.mean());
  const Eigen::VectorXd margins = predict_margin(s.model, s.data);
  EXPECT_NEAR(r.curves[0].mean_delta[5], base - margins.mean(), 1e-12);
}

TEST(RecourseTest, FlatAtTheMean) {
  const SmallRecourse s;
  DataMatrix at_mean;
  at_mean.values = s.spec.mean().transpose().replicate(5, 1);
  const RecourseReport r = run_recourse(s.model, s.spec, at_mean, 4);
  for (const auto& c : r.curves)
    for (double v : c.mean_delta) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(run_recourse(s.model, s.spec, s.data, 7), InvalidArgument);
}

TEST(RecourseTest, PlantedDummyStudy) {
  RecourseStudyConfig cfg;
  cfg.individuals = 500;
  cfg.seed = 3;
  const RecourseStudyReport r = run_recourse_study(cfg);
  EXPECT_TRUE(r.model_converged);
  EXPECT_EQ(r.result.individuals, 500U);
  EXPECT_EQ(r.result.curves[0].mean_delta, r.result.curves[2].mean_delta);
  for (std::size_t k = 0; k < cfg.k_max; ++k) {
    EXPECT_LE(r.result.curves[0].mean_delta[k], r.result.curves[1].mean_delta[k]);
  }
  EXPECT_EQ(run_recourse_study(cfg).result.curves[1].mean_delta, r.result.curves[1].mean_delta);
}

TEST(RecoveryHelpersTest, RankingAndCurve) {
  const auto ranking = rank_descending(Eigen::Vector4d(0.5, 2.0, 0.5, 0.0));
  EXPECT_EQ(ranking, (std::vector<std::size_t>{1, 0, 2, 3}));
  EXPECT_EQ(recovery_curve(ranking, {0, 3}), (std::vector<std::size_t>{0, 1, 1, 2}));
}

void expect_valid_curves(const RecoveryReport& r) {
  const std::size_t n = r.config.features;
  ASSERT_EQ(r.random_expectation.size(), n);
  for (std::size_t k = 0; k < n; ++k) {
    EXPECT_DOUBLE_EQ(r.random_expectation[k], static_cast<double>(r.config.causal * (k + 1)) / static_cast<double>(n));
  }
  ASSERT_EQ(r.curves.size(), 4U);
  for (const auto& c : r.curves) {
    ASSERT_EQ(c.recovered.size(), n);
    for (std::size_t k = 1; k < n; ++k) EXPECT_GE(c.recovered[k], c.recovered[k - 1]);
    EXPECT_EQ(c.recovered.back(), r.config.causal);
    EXPECT_GT(c.auc, 0.0);
    EXPECT_LE(c.auc, 1.0);
  }
}

TEST(RecoveryTest, ExactPathAtTwelveFeaturesAgreesWithSampled) {
  RecoveryConfig cfg;
  cfg.features = 12;
  cfg.causal = 3;
  cfg.seed = 5;
  const RecoveryReport exact = run_recovery(cfg);
  EXPECT_FALSE(exact.observational_sampled);
  expect_valid_curves(exact);
  cfg.force_sampled = true;
  const RecoveryReport sampled = run_recovery(cfg);
  EXPECT_TRUE(sampled.observational_sampled);
  for (const char* kind : {"lasso", "elastic_net"}) {
    const auto& e = exact.curve(kind, AttributionMode::kObservationalExact).importance;
    const auto& s = sampled.curve(kind, AttributionMode::kObservationalSampled).importance;
    EXPECT_LT((e - s).cwiseAbs().maxCoeff(), 0.05 * e.maxCoeff());
    EXPECT_EQ(exact.curve(kind, AttributionMode::kInterventional).importance,
              sampled.curve(kind, AttributionMode::kInterventional).importance);
  }
}

TEST(RecoveryTest, DeskScaleRunIsReproducibleAndUsesSampling) {
  RecoveryConfig cfg;
  cfg.seed = 1;
  const RecoveryReport a = run_recovery(cfg);
  EXPECT_TRUE(a.observational_sampled);
  EXPECT_EQ(a.causal.size(), 8U);
  expect_valid_curves(a);
  for (const auto& c : a.curves) EXPECT_GT(c.auc, a.random_auc);
  const RecoveryReport b = run_recovery(cfg);
  for (std::size_t c = 0; c < a.curves.size(); ++c) {
    EXPECT_EQ(a.curves[c].importance, b.curves[c].importance);
    EXPECT_EQ(a.curves[c].auc, b.curves[c].auc);
  }
}

TEST(RecoveryTest, UncorrelatedBlocksGiveIdenticalRankings) {
  RecoveryConfig cfg;
  cfg.features = 24;
  cfg.causal = 5;
  cfg.rho = 0.0;
  cfg.generating_moments = true;
  cfg.permutations = 50;
  const RecoveryReport r = run_recovery(cfg);
  for (const char* kind : {"lasso", "elastic_net"}) {
    const auto& obs = r.curve(kind, AttributionMode::kObservationalSampled);
    const auto& inter = r.curve(kind, AttributionMode::kInterventional);
    EXPECT_LT((obs.importance - inter.importance).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_EQ(obs.ranking, inter.ranking);
  }
}

}  // namespace
}  // namespace linshap
