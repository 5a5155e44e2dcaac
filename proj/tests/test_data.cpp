#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "sbice/data/dataset.hpp"
#include "sbice/errors.hpp"

using namespace sbice;

namespace {

Dataset random_dataset(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
  auto e = RandomStream(seed).engine();
  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd t(n), y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = e.normal() * std::pow(10.0, double(j) - 1);
    t(i) = e.uniform() < 0.4 ? 1 : 0;
    y(i) = e.normal() * 1e3 + 1e-7 * e.uniform();
  }
  std::vector<std::string> names;
  for (Eigen::Index j = 0; j < p; ++j) names.push_back("x" + std::to_string(j + 1));
  return Dataset(x, t, y, names);
}

ColumnSchema schema_for(std::vector<std::string> covs) {
  ColumnSchema s;
  s.covariate_columns = std::move(covs);
  return s;
}

}  // namespace

TEST(Dataset, InvariantsEnforced) {
  Eigen::MatrixXd x(2, 1);
  x << 1, 2;
  Eigen::VectorXd t(2), y(2);
  t << 0, 1;
  y << 0.5, 0.7;
  EXPECT_NO_THROW(Dataset(x, t, y, {"x"}));
  Eigen::VectorXd bad_t(2);
  bad_t << 0, 2;
  EXPECT_THROW(Dataset(x, bad_t, y, {"x"}), DataError);
  Eigen::VectorXd nan_y(2);
  nan_y << 0, std::nan("");
  EXPECT_THROW(Dataset(x, t, nan_y, {"x"}), DataError);
  EXPECT_THROW(Dataset(x.topRows(1), t.head(1), y.head(1), {"x"}), DataError);
  EXPECT_THROW(Dataset(x, t, y.head(1), {"x"}), DataError);
  EXPECT_THROW(Dataset(x, t, y, {}), DataError);
}

TEST(ReadCsv, ThreeRowFile) {
  std::istringstream in("x1,t,y\n0.5,1,2.0\n-1,0,3\n2e-3,true,4\n");
  const Dataset d = read_csv(in, schema_for({"x1"}));
  EXPECT_EQ(d.n(), 3);
  EXPECT_EQ(d.p(), 1);
  EXPECT_EQ(d.treatment()(2), 1.0);
  EXPECT_EQ(d.covariates()(2, 0), 2e-3);
}

TEST(ReadCsv, NonBinaryTreatmentNamesRow) {
  std::istringstream in("x1,t,y\n0.5,1,2.0\n-1,2,3\n");
  try {
    read_csv(in, schema_for({"x1"}));
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos) << e.what();
  }
}

TEST(ReadCsv, MissingCellsAndColumnsRejected) {
  std::istringstream missing_cell("x1,t,y\n0.5,1,\n1,0,3\n");
  EXPECT_THROW(read_csv(missing_cell, schema_for({"x1"})), DataError);
  std::istringstream missing_col("x1,t\n0.5,1\n1,0\n");
  EXPECT_THROW(read_csv(missing_col, schema_for({"x1"})), DataError);
  std::istringstream empty("");
  EXPECT_THROW(read_csv(empty, schema_for({"x1"})), DataError);
  std::istringstream header_only("x1,t,y\n");
  EXPECT_THROW(read_csv(header_only, schema_for({"x1"})), DataError);
  std::istringstream text("x1,t,y\nabc,1,2\n1,0,3\n");
  EXPECT_THROW(read_csv(text, schema_for({"x1"})), DataError);
}

TEST(ReadCsv, SchemaSelectsAndOrdersColumns) {
  std::istringstream in("y,b,t,a\n1,2,0,3\n4,5,1,6\n");
  const Dataset d = read_csv(in, schema_for({"a", "b"}));
  EXPECT_EQ(d.covariate_names(), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(d.covariates()(0, 0), 3);
  EXPECT_EQ(d.covariates()(1, 1), 5);
  EXPECT_EQ(d.outcome()(1), 4);
}

TEST(WriteCsv, HeaderFollowsSchemaOrder) {
  const Dataset d = random_dataset(5, 3, 1);
  const std::string csv = to_csv_string(d);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "x1,x2,x3,t,y");
  const Dataset one = random_dataset(4, 1, 2);
  const std::string s = to_csv_string(one);
  const std::string header = s.substr(0, s.find('\n'));
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), 2);
}

TEST(WriteCsv, RoundTripIsExact) {
  const Dataset d = random_dataset(1000, 3, 5);
  const auto dir = std::filesystem::temp_directory_path() / "sbice_test_data";
  std::filesystem::create_directories(dir);
  const auto path = dir / "round_trip.csv";
  write_csv(d, path);
  const Dataset back = read_csv(path, d.schema());
  EXPECT_EQ(back.covariates(), d.covariates());
  EXPECT_EQ(back.treatment(), d.treatment());
  EXPECT_EQ(back.outcome(), d.outcome());
  EXPECT_EQ(back.covariate_names(), d.covariate_names());
  std::filesystem::remove_all(dir);
}

TEST(FormatDouble, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 1e300, 5e-324, 123456789.125}) {
    EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v);
  }
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(2.0), "2");
}

TEST(SchemaFromHeader, SplitsRoles) {
  const ColumnSchema s = schema_from_header("a,y,t,b", "t", "y");
  EXPECT_EQ(s.covariate_columns, (std::vector<std::string>{"a", "b"}));
  EXPECT_THROW(schema_from_header("a,b,y", "t", "y"), Error);
}

TEST(Standardizer, ReferenceBecomesStandard) {
  const Dataset d = random_dataset(500, 3, 7);
  const Standardizer s = Standardizer::fit(d);
  const Dataset z = s.apply(d);
  for (Eigen::Index j = 0; j < z.p(); ++j) {
    const Eigen::VectorXd c = z.covariates().col(j);
    const double m = c.mean();
    EXPECT_NEAR(m, 0.0, 1e-9);
    EXPECT_NEAR(std::sqrt((c.array() - m).square().mean()), 1.0, 1e-9);
  }
  EXPECT_NEAR(z.outcome().mean(), 0.0, 1e-9);
  EXPECT_EQ(z.treatment(), d.treatment());
  EXPECT_EQ(z.n(), d.n());
  EXPECT_EQ(z.p(), d.p());
}

TEST(Standardizer, ConstantColumnOnlyCentred) {
  Eigen::MatrixXd x(3, 1);
  x << 4, 4, 4;
  Eigen::VectorXd t(3), y(3);
  t << 0, 1, 0;
  y << 1, 2, 3;
  const Dataset d(x, t, y, {"c"});
  const Standardizer s = Standardizer::fit(d);
  EXPECT_EQ(s.covariate_sd()(0), 1.0);
  const Dataset z = s.apply(d);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(z.covariates()(i, 0), 0.0);
}

TEST(Standardizer, InverseRoundTrip) {
  const Dataset d = random_dataset(300, 2, 8);
  const Standardizer s = Standardizer::fit(d);
  const Dataset back = s.invert(s.apply(d));
  EXPECT_LE((back.covariates() - d.covariates()).cwiseAbs().maxCoeff(), 1e-12 * 1e3);
  EXPECT_LE((back.outcome() - d.outcome()).cwiseAbs().maxCoeff(), 1e-12 * 1e4);
}

TEST(Standardizer, JointMatrixMatchesDatasetPath) {
  const Dataset d = random_dataset(50, 2, 9);
  const Standardizer s = Standardizer::fit(d);
  Eigen::MatrixXd joint = d.joint_matrix();
  s.apply_joint(joint);
  EXPECT_LE((joint - s.apply(d).joint_matrix()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Bootstrap, DegenerateSourceRepeatsTheRow) {
  Eigen::MatrixXd x(2, 2);
  x << 1.5, -2, 1.5, -2;
  Eigen::VectorXd t(2), y(2);
  t << 0, 1;
  y << 0, 0;
  const Dataset d(x, t, y, {"a", "b"});
  const Eigen::MatrixXd b = bootstrap_covariates(d, d.n(), RandomStream(1));
  ASSERT_EQ(b.rows(), 2);
  for (Eigen::Index i = 0; i < b.rows(); ++i) EXPECT_EQ(b.row(i), x.row(0));
}

TEST(Bootstrap, RowsComeFromSourceAndMeanMatches) {
  const Dataset d = random_dataset(200, 2, 10);
  const Eigen::Index n = 100000;
  const Eigen::MatrixXd b = bootstrap_covariates(d, n, RandomStream(2));
  std::set<std::pair<double, double>> rows;
  for (Eigen::Index i = 0; i < d.n(); ++i) rows.insert({d.covariates()(i, 0), d.covariates()(i, 1)});
  for (Eigen::Index i = 0; i < n; ++i) ASSERT_TRUE(rows.count({b(i, 0), b(i, 1)}));
  const Eigen::VectorXd c = d.covariates().col(0);
  const double mu = c.mean();
  const double sd = std::sqrt((c.array() - mu).square().mean());
  EXPECT_NEAR(b.col(0).mean(), mu, 3.0 * sd / std::sqrt(double(n)));
}
