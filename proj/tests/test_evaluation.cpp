#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "sbice/errors.hpp"
#include "sbice/eval/evaluation.hpp"
#include "sbice/sim/simulator.hpp"

using namespace sbice;

namespace {

// Pairwise definition: P(score_pos > score_neg) + 0.5 P(tie).
double brute_auc(const std::vector<double>& s, const std::vector<double>& l) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (l[i] == 1.0 && l[j] == 0.0) {
        den += 1.0;
        num += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
      }
    }
  }
  return num / den;
}

Dataset sim1_data(Eigen::Index n, std::uint64_t seed) {
  const ThetaVector theta{{"rho", 1.0}, {"beta", -1.5}, {"tau", 1.5}};
  return simulate_linear(LinearModel::dgp1, theta, n, nullptr, RandomStream(seed));
}

Dataset rows_of(const Dataset& d, Eigen::Index begin, Eigen::Index count) {
  return Dataset(d.covariates().middleRows(begin, count), d.treatment().segment(begin, count),
                 d.outcome().segment(begin, count), d.covariate_names());
}

AteEstimate ok(double v) {
  AteEstimate e;
  e.value = v;
  return e;
}

AteEstimate failed() {
  AteEstimate e;
  e.failure = "boom";
  return e;
}

}  // namespace

TEST(RocAuc, PerfectOrdering) {
  const std::vector<double> s{0.1, 0.2, 0.3, 0.4}, l{0, 0, 1, 1};
  EXPECT_EQ(roc_auc(s, l), 1.0);
}

TEST(RocAuc, HandExample) {
  const std::vector<double> s{0.1, 0.4, 0.35, 0.8}, l{0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(roc_auc(s, l), 0.75);
}

TEST(RocAuc, AllTiedIsHalf) {
  const std::vector<double> s(6, 0.3), l{0, 1, 0, 1, 1, 0};
  EXPECT_DOUBLE_EQ(roc_auc(s, l), 0.5);
}

TEST(RocAuc, ComplementAndMonotoneInvariance) {
  auto e = RandomStream(3).engine();
  std::vector<double> s(200), l(200), flipped(200), transformed(200);
  for (int i = 0; i < 200; ++i) {
    s[i] = std::round(e.normal() * 4.0) / 4.0;  // plenty of ties
    l[i] = e.uniform() < 0.4 + 0.1 * (s[i] > 0) ? 1.0 : 0.0;
    flipped[i] = 1.0 - l[i];
    transformed[i] = std::exp(3.0 * s[i]) - 7.0;
  }
  EXPECT_EQ(roc_auc(s, l) + roc_auc(s, flipped), 1.0);
  EXPECT_DOUBLE_EQ(roc_auc(s, l), roc_auc(transformed, l));
  EXPECT_NEAR(roc_auc(s, l), brute_auc(s, l), 1e-12);
}

TEST(RocAuc, Errors) {
  const std::vector<double> s{1, 2}, one{1, 1}, bad{0, 2};
  EXPECT_THROW(roc_auc(s, one), DomainError);
  EXPECT_THROW(roc_auc(s, bad), DomainError);
}

TEST(StratifiedFolds, KeepClassBalance) {
  std::vector<double> l(103, 0.0);
  for (int i = 0; i < 31; ++i) l[i * 3] = 1.0;
  const auto f = stratified_folds(l, 5, 9);
  for (int k = 0; k < 5; ++k) {
    int pos = 0, all = 0;
    for (std::size_t i = 0; i < l.size(); ++i) {
      if (f[i] == k) {
        ++all;
        pos += l[i] == 1.0;
      }
    }
    EXPECT_GE(pos, 6);
    EXPECT_LE(pos, 7);
    EXPECT_GE(all, 20);
  }
}

TEST(RandomForest, NoSignalGivesClassPrior) {
  const Eigen::MatrixXd x = Eigen::MatrixXd::Constant(300, 1, 2.0);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(300);
  y.head(90).setOnes();
  const auto rf = RandomForest::fit(x, y, ClassifierConfig{});
  const auto p = rf.predict_proba(x.topRows(3));
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(p[i], 0.3, 0.1);
}

TEST(RandomForest, SeparableBlobs) {
  auto e = RandomStream(17).engine();
  auto blobs = [&](Eigen::Index n, Eigen::MatrixXd& x, Eigen::VectorXd& y) {
    x.resize(n, 2);
    y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      y[i] = i % 2;
      const double c = y[i] == 1.0 ? 2.5 : -2.5;
      x(i, 0) = c + e.normal();
      x(i, 1) = c + e.normal();
    }
  };
  Eigen::MatrixXd xt, xh;
  Eigen::VectorXd yt, yh;
  blobs(400, xt, yt);
  blobs(400, xh, yh);
  const auto p = RandomForest::fit(xt, yt, ClassifierConfig{}).predict_proba(xh);
  int correct = 0;
  for (int i = 0; i < 400; ++i) correct += (p[i] > 0.5) == (yh[i] == 1.0);
  EXPECT_GE(correct / 400.0, 0.95);
}

TEST(RandomForest, SameSeedSameForest) {
  auto e = RandomStream(18).engine();
  Eigen::MatrixXd x(200, 3);
  Eigen::VectorXd y(200);
  for (int i = 0; i < 200; ++i) {
    for (int j = 0; j < 3; ++j) x(i, j) = e.normal();
    y[i] = e.uniform() < 0.5 ? 1.0 : 0.0;
  }
  ClassifierConfig cfg;
  cfg.n_trees = 20;
  cfg.seed = 4;
  const auto a = RandomForest::fit(x, y, cfg).predict_proba(x);
  const auto b = RandomForest::fit(x, y, cfg).predict_proba(x);
  EXPECT_EQ(a, b);
  cfg.seed = 5;
  EXPECT_NE(a, RandomForest::fit(x, y, cfg).predict_proba(x));
  EXPECT_THROW(RandomForest::fit(x, Eigen::VectorXd::Zero(200), cfg), DomainError);
}

TEST(ClassifierAuc, FreshDrawsAreIndistinguishable) {
  const Dataset source = sim1_data(1000, 40);
  std::vector<GeneratedDataset> gen;
  for (int i = 0; i < 10; ++i) gen.push_back({sim1_data(1000, 100 + i), ThetaVector{}, std::nullopt});
  ClassifierConfig cfg;
  cfg.seed = 1;
  const auto r = classifier_auc(gen, source, cfg);
  ASSERT_EQ(r.per_dataset.size(), 10u);
  EXPECT_NEAR(r.mean, 0.5, 0.07);
  for (double a : r.per_dataset) {
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, 1.0);
  }
}

TEST(ClassifierAuc, BootstrapRowsNeverLookDistinguishable) {
  // Exact duplicates with opposite labels are memorized, which drags the
  // out-of-fold AUC below 0.5 rather than above it.
  const Dataset source = sim1_data(1000, 40);
  const Eigen::MatrixXd joint = source.joint_matrix();
  std::vector<GeneratedDataset> gen;
  for (int i = 0; i < 5; ++i) {
    auto e = RandomStream(41, i).engine();
    Eigen::MatrixXd j(1000, 3);
    for (int r = 0; r < 1000; ++r) j.row(r) = joint.row(std::min<Eigen::Index>(e.uniform() * 1000, 999));
    gen.push_back({Dataset(j.col(0), j.col(1), j.col(2), {"x"}), ThetaVector{}, std::nullopt});
  }
  EXPECT_LE(classifier_auc(gen, source, ClassifierConfig{}).mean, 0.57);
}

TEST(ClassifierAuc, ShiftedOutcomeIsSeparated) {
  const Dataset source = sim1_data(500, 42);
  const Dataset other = sim1_data(500, 43);
  const double sd = std::sqrt((other.outcome().array() - other.outcome().mean()).square().mean());
  const Eigen::VectorXd y = other.outcome().array() + 10.0 * sd;
  std::vector<GeneratedDataset> gen{
      {Dataset(other.covariates(), other.treatment(), y, {"x"}), ThetaVector{}, std::nullopt}};
  EXPECT_GE(classifier_auc(gen, source, ClassifierConfig{}).mean, 0.95);
}

TEST(ClassifierAuc, DisjointHalvesCalibrationBand) {
  const Dataset all = sim1_data(4000, 44);
  const Dataset a = rows_of(all, 0, 2000), b = rows_of(all, 2000, 2000);
  std::vector<GeneratedDataset> gen{{a, ThetaVector{}, std::nullopt}};
  const double auc = classifier_auc(gen, b, ClassifierConfig{}).mean;
  EXPECT_GE(auc, 0.43);
  EXPECT_LE(auc, 0.57);
}

TEST(ClassifierAuc, SchemaMismatch) {
  const Dataset source = sim1_data(100, 45);
  Eigen::MatrixXd x2(100, 2);
  x2 << source.covariates(), source.covariates();
  std::vector<GeneratedDataset> gen{
      {Dataset(x2, source.treatment(), source.outcome(), {"x", "w"}), ThetaVector{}, std::nullopt}};
  EXPECT_THROW(classifier_auc(gen, source, ClassifierConfig{}), DataError);
  EXPECT_THROW(classifier_auc({}, source, ClassifierConfig{}), DomainError);
}

TEST(MeanBse, ZeroWhenBiasesMatch) {
  const std::vector<AteEstimate> est{ok(1.2), ok(2.2), ok(0.2)};
  const std::vector<double> tau{1.0, 2.0, 0.0};
  const auto r = mean_bse(est, tau, 3.2, 3.0);
  ASSERT_TRUE(r.value.has_value());
  EXPECT_NEAR(*r.value, 0.0, 1e-15);
}

TEST(MeanBse, HandExample) {
  const std::vector<AteEstimate> est{ok(1.5), ok(0.5)};
  const std::vector<double> tau{1.0, 1.0};
  EXPECT_DOUBLE_EQ(*mean_bse(est, tau, 2.0, 2.0).value, 0.25);
}

TEST(MeanBse, CommonShiftInvariance) {
  const std::vector<AteEstimate> est{ok(1.3), ok(-0.4), ok(2.9)};
  const std::vector<double> tau{1.0, 0.1, 2.0};
  const double base = *mean_bse(est, tau, 0.7, 0.2).value;
  const double c = 12.5;
  const std::vector<AteEstimate> est2{ok(1.3 + c), ok(-0.4 + c), ok(2.9 + c)};
  const std::vector<double> tau2{1.0 + c, 0.1 + c, 2.0 + c};
  EXPECT_NEAR(*mean_bse(est2, tau2, 0.7 + c, 0.2 + c).value, base, 1e-12);
}

TEST(MeanBse, SingleDatasetIsSquaredBiasDifference) {
  const std::vector<AteEstimate> est{ok(3.0)};
  const std::vector<double> tau{2.5};
  EXPECT_DOUBLE_EQ(*mean_bse(est, tau, 1.0, 1.25).value, std::pow(0.5 - (-0.25), 2));
}

TEST(MeanBse, FailuresExcludedAndCounted) {
  const std::vector<AteEstimate> est{ok(1.5), failed(), ok(0.5)};
  const std::vector<double> tau{1.0, 1.0, 1.0};
  const auto r = mean_bse(est, tau, 2.0, 2.0);
  EXPECT_EQ(r.n_failed, 1);
  EXPECT_EQ(r.n_used, 2);
  EXPECT_DOUBLE_EQ(*r.value, 0.25);
  const std::vector<AteEstimate> none{failed(), failed()};
  const std::vector<double> tau2{1.0, 1.0};
  EXPECT_FALSE(mean_bse(none, tau2, 0.0, 0.0).value.has_value());
}

TEST(MeanBse, PerDatasetSourceEstimates) {
  const std::vector<AteEstimate> est{ok(1.5), ok(0.5)};
  const std::vector<double> tau{1.0, 1.0}, src{2.5, 1.5};
  // Biases 0.5, -0.5 against source biases 0.5, -0.5.
  EXPECT_DOUBLE_EQ(*mean_bse(est, tau, src, 2.0).value, 0.0);
}

TEST(EstimateAll, MatchesDirectCalls) {
  std::vector<Dataset> ds{sim1_data(300, 50), sim1_data(300, 51), sim1_data(300, 52)};
  const std::vector<EstimatorId> ids{EstimatorId::diff_means, EstimatorId::dml_gbt};
  const auto all = estimate_all(ds, ids, LearnerConfig{});
  ASSERT_EQ(all.size(), 2u);
  for (std::size_t e = 0; e < ids.size(); ++e) {
    ASSERT_EQ(all[e].size(), 3u);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      EXPECT_EQ(*all[e][i].value, *estimate_ate(ds[i], ids[e], LearnerConfig{}).value);
      EXPECT_EQ(all[e][i].estimator, ids[e]);
    }
  }
}
