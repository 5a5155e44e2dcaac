#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "sbice/distance/sliced_wasserstein.hpp"
#include "sbice/errors.hpp"
#include "sbice/sim/simulator.hpp"

using namespace sbice;

namespace {

const ThetaVector kTruth{{"rho", 1.0}, {"beta", -1.5}, {"tau", 1.5}};

Dataset sim1(std::uint64_t seed, Eigen::Index n = 500) {
  return simulate_linear(LinearModel::dgp1, kTruth, n, nullptr, RandomStream(seed));
}

Dataset shifted(const Dataset& d, double c) {
  Eigen::VectorXd y = d.outcome().array() + c;
  return Dataset(d.covariates(), d.treatment(), y, d.covariate_names());
}

// Brute force over every coupling of two equal-size samples: W_p^p is the
// minimum over permutations of the mean cost.
double brute_force_wp(std::vector<double> a, std::vector<double> b, int p) {
  std::sort(b.begin(), b.end());
  double best = INFINITY;
  do {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::pow(std::abs(a[i] - b[i]), p);
    best = std::min(best, s / double(a.size()));
  } while (std::next_permutation(b.begin(), b.end()));
  return std::pow(best, 1.0 / p);
}

ProjectionSet outcome_axis(Eigen::Index dim) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(dim, 1);
  d(dim - 1, 0) = 1.0;
  return ProjectionSet(d);
}

}  // namespace

TEST(Wasserstein1d, HandExamples) {
  const std::vector<double> a = {0, 1};
  EXPECT_EQ(wasserstein_1d(a, a, 2), 0.0);
  EXPECT_DOUBLE_EQ(wasserstein_1d(std::vector<double>{0, 0}, std::vector<double>{1, 1}, 2), 1.0);
  EXPECT_DOUBLE_EQ(wasserstein_1d(std::vector<double>{1, 2, 3}, std::vector<double>{2, 3, 4}, 2), 1.0);
  EXPECT_DOUBLE_EQ(wasserstein_1d(std::vector<double>{3, 1, 2}, std::vector<double>{4, 2, 3}, 1), 1.0);
}

TEST(Wasserstein1d, MatchesBruteForceCoupling) {
  auto e = RandomStream(4).engine();
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a(6), b(6);
    for (auto& v : a) v = e.normal();
    for (auto& v : b) v = 2 * e.uniform();
    for (int p : {1, 2}) EXPECT_NEAR(wasserstein_1d(a, b, p), brute_force_wp(a, b, p), 1e-12);
  }
}

TEST(Wasserstein1d, UnequalSizesMatchReplicatedSample) {
  // A sample of size n equals, as a measure, the same sample with every
  // point repeated k times; compare against the equal-size formula.
  const std::vector<double> a = {0.3, -1.0, 2.0};
  const std::vector<double> b = {1.0, 0.0};
  std::vector<double> a6, b6;
  for (double v : a) a6.insert(a6.end(), 2, v);
  for (double v : b) b6.insert(b6.end(), 3, v);
  for (int p : {1, 2}) {
    EXPECT_NEAR(wasserstein_1d(a, b, p), wasserstein_1d(a6, b6, p), 1e-12);
    EXPECT_EQ(wasserstein_1d(a, b, p), wasserstein_1d(b, a, p));
  }
}

TEST(Wasserstein1d, RejectsEmptyAndBadOrder) {
  const std::vector<double> a = {1.0};
  EXPECT_THROW(wasserstein_1d(a, std::vector<double>{}, 2), DomainError);
  EXPECT_THROW(wasserstein_1d(a, a, 3), ConfigError);
}

TEST(SlicedWasserstein, SelfDistanceIsZero) {
  const Dataset a = sim1(1);
  const DistanceConfig cfg{};
  EXPECT_EQ(sliced_wasserstein(a, a, cfg, Standardizer::fit(a)), 0.0);
}

TEST(SlicedWasserstein, SymmetricBitExact) {
  const Dataset a = sim1(1), b = sim1(2, 400);
  const auto s = Standardizer::fit(a);
  for (int order : {1, 2}) {
    DistanceConfig cfg;
    cfg.order = order;
    cfg.projection_seed = 17;
    EXPECT_EQ(sliced_wasserstein(a, b, cfg, s), sliced_wasserstein(b, a, cfg, s));
  }
}

TEST(SlicedWasserstein, SingleAxisReducesToOneDimensional) {
  const Dataset a = sim1(1), b = sim1(2);
  const double sw = sliced_wasserstein(a.joint_matrix(), b.joint_matrix(), outcome_axis(3), 2);
  const std::vector<double> ya(a.outcome().data(), a.outcome().data() + a.n());
  const std::vector<double> yb(b.outcome().data(), b.outcome().data() + b.n());
  EXPECT_NEAR(sw, wasserstein_1d(ya, yb, 2), 1e-12);
}

TEST(SlicedWasserstein, OutcomeShiftGivesShiftDistance) {
  const Dataset a = sim1(3);
  for (double c : {0.5, -2.0, 10.0}) {
    const Dataset b = shifted(a, c);
    EXPECT_NEAR(sliced_wasserstein(a.joint_matrix(), b.joint_matrix(), outcome_axis(3), 2),
                std::abs(c), 1e-9);
  }
}

TEST(SlicedWasserstein, SameThetaBelowNullQuantile) {
  const Dataset source = sim1(100);
  const auto s = Standardizer::fit(source);
  DistanceConfig cfg;
  cfg.projection_seed = 5;
  std::vector<double> null;
  for (std::uint64_t r = 0; r < 200; ++r) {
    null.push_back(sliced_wasserstein(sim1(1000 + 2 * r), sim1(1001 + 2 * r), cfg, s));
  }
  std::sort(null.begin(), null.end());
  const double q99 = null[197];
  EXPECT_LT(sliced_wasserstein(sim1(7), sim1(8), cfg, s), q99);
  // A different theta sits far outside the same-theta null.
  const Dataset other = simulate_linear(LinearModel::dgp1, {{"rho", 0.2}, {"beta", 0.5}, {"tau", 0.5}},
                                        500, nullptr, RandomStream(9));
  EXPECT_GT(sliced_wasserstein(sim1(7), other, cfg, s), null.back());
}

TEST(SlicedWasserstein, ProjectionVarianceShrinksWithMoreDirections) {
  const Dataset a = sim1(1), b = simulate_linear(LinearModel::dgp1, {{"rho", 0.5}, {"beta", -1.0}, {"tau", 1.0}},
                                                 500, nullptr, RandomStream(2));
  const auto s = Standardizer::fit(a);
  auto variance = [&](int count) {
    std::vector<double> v;
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
      DistanceConfig cfg;
      cfg.n_projections = count;
      cfg.projection_seed = seed;
      v.push_back(sliced_wasserstein(a, b, cfg, s));
    }
    double m = 0;
    for (double x : v) m += x;
    m /= double(v.size());
    double var = 0;
    for (double x : v) var += (x - m) * (x - m);
    return var / double(v.size() - 1);
  };
  EXPECT_LT(variance(100), variance(10));
}

TEST(SlicedWasserstein, SchemaMismatchRejected) {
  const Dataset a = sim1(1);
  const Dataset b = simulate_linear(LinearModel::dgp11, {{"tau", 3.0}}, 100, nullptr, RandomStream(1));
  EXPECT_THROW(sliced_wasserstein(a, b, DistanceConfig{}, Standardizer::fit(a)), DataError);
}

TEST(SlicedWasserstein, CachedReferenceMatchesDirectEvaluation) {
  const Dataset a = sim1(1), b = sim1(2);
  const auto s = Standardizer::fit(a);
  const auto proj = ProjectionSet::random(3, 50, RandomStream(8));
  const SlicedWassersteinReference ref(a, proj, 2, s);
  Eigen::MatrixXd ja = a.joint_matrix(), jb = b.joint_matrix();
  s.apply_joint(ja);
  s.apply_joint(jb);
  EXPECT_EQ(ref.distance(b), sliced_wasserstein(ja, jb, proj, 2));
  EXPECT_EQ(ref.distance(a), 0.0);
}

TEST(ProjectionSet, DirectionsAreUnitAndDeterministic) {
  const auto p = ProjectionSet::random(5, 100, RandomStream(3));
  const auto q = ProjectionSet::random(5, 100, RandomStream(3));
  EXPECT_EQ(p.directions(), q.directions());
  for (int k = 0; k < p.count(); ++k) EXPECT_NEAR(p.directions().col(k).norm(), 1.0, 1e-14);
  EXPECT_THROW(ProjectionSet(Eigen::MatrixXd::Zero(3, 1)), ConfigError);
}
