#include "sbice/sim/catalog.hpp"

#include <algorithm>

#include "sbice/errors.hpp"

namespace sbice {
namespace {

using D = DistributionSpec;

PriorSpec box(double lo, double hi) {
  return PriorSpec({{"rho", lo, hi}, {"beta", lo, hi}, {"tau", lo, hi}});
}

PriorSpec box(std::vector<ParameterBound> b) { return PriorSpec(std::move(b)); }

CorrelationMatrix rows(std::initializer_list<std::initializer_list<double>> r) {
  const auto n = static_cast<Eigen::Index>(r.size());
  Eigen::MatrixXd m(n, n);
  Eigen::Index i = 0;
  for (const auto& row : r) {
    Eigen::Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return CorrelationMatrix::spearman(std::move(m));
}

FrugalConfig frugal_dgp12(bool second) {
  FrugalConfig f;
  f.covariates = {
      {"z1", D::beta(1.0, 1.0), true},
      {"z2", D::normal(1.0, 0.5), true},
      {"x1", D::normal(-2.0, 2.0), false},
      {"x2", D::beta(0.5, 0.25), false},
      {"x3", D::student_t(1.0, 1.0, 3.0), false},
  };
  f.propensity_intercept = 0.5;
  f.propensity_coefficients = {0.3, 1.0, 0.4, 1.0, 4.0};
  f.propensity_interactions = {{2, 0, 1.0}, {2, 4, -0.5}};
  f.margin_intercept = 0.0;
  f.margin_sd = 1.0;
  if (second) {
    f.correlation = rows({{1, .8, .2, .3, .2, .7},
                          {.8, 1, .1, .4, .9, .3},
                          {.2, .1, 1, .5, .8, .1},
                          {.3, .4, .5, 1, .9, .5},
                          {.2, .9, .8, .9, 1, .6},
                          {.7, .3, .1, .5, .6, 1}});
  } else {
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(6, 6, 0.8);
    m.diagonal().setOnes();
    f.correlation = CorrelationMatrix::spearman(m);
  }
  return f;
}

FrugalConfig frugal_dgp3(bool hide_x2) {
  FrugalConfig f;
  f.covariates = {
      {"x1", D::normal(2.0, 1.0), false},
      {"x2", D::gamma(1.0, 1.0), hide_x2},
      {"x3", D::normal(3.0, 1.0), false},
  };
  f.propensity_coefficients = {-0.3, 0.3, -0.4};
  f.propensity_interactions = {{0, 1, -0.1}};
  f.margin_intercept = 0.0;
  f.margin_sd = 1.5;
  f.correlation = rows({{1, 0, 0, -.5}, {0, 1, 0, -.3}, {0, 0, 1, .9}, {-.5, -.3, .9, 1}});
  f.rho_override = hide_x2;
  return f;
}

FrugalConfig frugal_dgp4(bool hide_x4) {
  FrugalConfig f;
  for (int i = 1; i <= 4; ++i) {
    f.covariates.push_back({"x" + std::to_string(i), D::gamma(1.0, 1.0), hide_x4 && i == 4});
  }
  f.propensity_intercept = -2.0;
  f.propensity_coefficients = {1.0, 1.0, 1.0, 1.0};
  f.margin_intercept = 0.5;
  f.margin_sd = 1.0;
  f.correlation = rows({{1, .5, .3, .1, .8},
                        {.5, 1, .4, .1, .8},
                        {.3, .4, 1, .1, .8},
                        {.1, .1, .1, 1, .8},
                        {.8, .8, .8, .8, 1}});
  f.rho_override = hide_x4;
  return f;
}

FrugalConfig frugal_dgp5(bool hide) {
  FrugalConfig f;
  for (int i = 1; i <= 10; ++i) {
    const bool hidden = hide && (i == 3 || i == 7);
    f.covariates.push_back({"x" + std::to_string(i),
                            i <= 5 ? D::gamma(1.3, 1.0) : D::bernoulli(0.5), hidden});
  }
  f.propensity_intercept = -0.3;
  f.propensity_coefficients = {0.1, 0.2, 0.5, -0.2, 1.0, 0.3, -0.4, 0.7, -0.1, 0.9};
  f.margin_intercept = 2.5;
  f.margin_sd = 1.0;
  const double r5[10][10] = {
      {1, .3, .4, .5, .1, -.2, -.7, .5, -.4, .5},
      {.3, 1, -.3, .6, -.3, .4, -.4, .6, .3, .2},
      {.4, -.3, 1, -.5, .2, -.1, -.1, 0, -.4, -.4},
      {.5, .6, -.5, 1, -.2, -.2, -.5, .5, .3, .4},
      {.1, -.3, .2, -.2, 1, -.1, -.1, -.5, -.6, -.2},
      {-.2, .4, -.1, -.2, -.2, 1, 0, .4, .2, .5},
      {-.7, -.4, -.1, -.5, -.1, 0, 1, -.5, .4, -.4},
      {.5, .6, 0, .5, -.5, .5, -.5, 1, .4, .4},
      {-.4, .3, -.4, .3, -.6, .2, .4, .4, 1, .4},
      {.5, .2, -.4, .4, -.2, .5, -.4, .4, .4, 1},
  };
  // The given matrix covers the covariates only and is not symmetric in
  // two entry pairs; the upper triangle is used, and the causal margin is left
  // uncorrelated with the covariates.
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(11, 11);
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) m(i, j) = r5[std::min(i, j)][std::max(i, j)];
  }
  f.correlation = CorrelationMatrix::spearman(m);
  f.rho_override = hide;
  return f;
}

SimulatorConfig linear(LinearModel m) { return SimulatorConfig{BuiltinLinearConfig{m}, 2000, {}}; }

SimulatorConfig frugal(FrugalConfig f) { return SimulatorConfig{std::move(f), 2000, {}}; }

std::vector<CatalogEntry> build() {
  const ThetaVector dgp1_truth{{"rho", 1.0}, {"beta", -1.5}, {"tau", 1.5}};
  const ThetaVector dgp6_truth{{"rho", 2.0}, {"beta", 0.5}, {"tau", 2.0}};
  const ThetaVector partial_truth{{"rho", 1.0}, {"beta", 0.3}, {"tau", 2.0}};
  const ThetaVector narrow_truth{{"rho", 1.0}, {"beta", 0.3}, {"tau", 1.0}};
  const PriorSpec sim1_prior({{"rho", 0.0, 2.0}, {"beta", -2.0, 1.0}, {"tau", 0.0, 2.0}});
  const PriorSpec wide = box(-5.0, 5.0);
  const PriorSpec tau10 = box({{"tau", 0.0, 10.0}});
  const PriorSpec tau10_rho = box({{"tau", 0.0, 10.0}, {"rho", -1.0, 1.0}});
  const PriorSpec tau20_rho = box({{"tau", -20.0, 20.0}, {"rho", -1.0, 1.0}});

  std::vector<CatalogEntry> c;
  auto add = [&](std::string id, std::string description, SimulatorConfig sim,
                 ThetaVector reference, PriorSpec prior, std::string source_id,
                 bool approximate = false) {
    c.push_back(CatalogEntry{std::move(id), std::move(description), std::move(sim),
                             std::move(reference), std::move(prior), std::move(source_id),
                             approximate});
  };

  add("sim1", "linear simulator, covariates reused from the source",
      linear(LinearModel::sim1), dgp1_truth, sim1_prior, "dgp1");
  add("sim2", "sim1 with outcome noise sd 1", linear(LinearModel::sim2), dgp1_truth, wide, "dgp1");
  add("sim3", "sim1 with an exponential unobserved confounder", linear(LinearModel::sim3),
      dgp1_truth, wide, "dgp1");
  add("sim4", "sim1 with an X*Z interaction in treatment and outcome",
      linear(LinearModel::sim4), dgp1_truth, wide, "dgp1");
  add("sim5", "sim1 equations against the polynomial dgp5", linear(LinearModel::sim5),
      dgp1_truth, wide, "dgp5");
  add("sim6", "binary confounder with T = Z; only rho + tau identified",
      linear(LinearModel::sim6), dgp6_truth, box(0.0, 10.0), "dgp6");
  add("sim7", "sim6 with the joint prior rho + tau = 3", linear(LinearModel::sim7), partial_truth,
      PriorSpec({{"rho", -5.0, 5.0}, {"beta", 0.0, 5.0}, {"tau", -20.0, 20.0}},
                LinearConstraint{{{"rho", 1.0}, {"tau", 1.0}}, 3.0}),
      "dgp6");
  add("sim8", "treatment also driven by X", linear(LinearModel::sim8), partial_truth,
      box(0.0, 10.0), "dgp8");
  add("sim9", "sim6 equations with narrow priors", linear(LinearModel::sim9), narrow_truth,
      box(0.0, 2.0), "dgp6");
  add("sim10", "sim1 equations with priors excluding the truth", linear(LinearModel::sim10),
      dgp1_truth,
      PriorSpec({{"rho", -2.0, 0.0}, {"beta", 0.0, 2.0}, {"tau", -2.0, 0.0}}), "dgp10");
  add("sim11", "three covariates, effect size only", linear(LinearModel::sim11),
      ThetaVector{{"tau", 3.0}}, tau10, "dgp11");

  add("dgp1", "linear source process", linear(LinearModel::dgp1), dgp1_truth, sim1_prior, "dgp1");
  add("dgp5", "polynomial outcome source process", linear(LinearModel::dgp5), dgp1_truth, wide,
      "dgp5");
  add("dgp6", "binary confounder source process", linear(LinearModel::dgp6), dgp6_truth,
      box(0.0, 10.0), "dgp6");
  add("dgp8", "binary confounder, treatment driven by X", linear(LinearModel::dgp8),
      partial_truth, box(0.0, 10.0), "dgp8");
  add("dgp10", "linear source process for the misspecified-prior case",
      linear(LinearModel::dgp10), dgp1_truth,
      PriorSpec({{"rho", -2.0, 0.0}, {"beta", 0.0, 2.0}, {"tau", -2.0, 0.0}}), "dgp10");
  add("dgp11", "three covariates, constant effect 3", linear(LinearModel::dgp11),
      ThetaVector{{"tau", 3.0}}, tau10, "dgp11");

  add("c1", "identification fixture: Y = X + T", linear(LinearModel::c1), {}, {}, "c1");
  add("c2", "identification fixture: C1 plus a mean-zero X*T*xi term", linear(LinearModel::c2),
      {}, {}, "c2");
  add("c3", "identification fixture with a binary outcome shifter", linear(LinearModel::c3), {},
      {}, "c3");
  add("c4", "identification fixture with a normal outcome shifter", linear(LinearModel::c4), {},
      {}, "c4");
  add("null", "output independent of theta", linear(LinearModel::null_model), dgp1_truth,
      sim1_prior, "null");

  add("frugal_dgp1", "copula process with two hidden confounders (repaired margins)",
      frugal(frugal_dgp12(false)), ThetaVector{{"tau", 3.0}}, tau10, "frugal_dgp1", true);
  add("frugal_dgp2", "frugal_dgp1 margins with a mixed correlation matrix",
      frugal(frugal_dgp12(true)), ThetaVector{{"tau", 3.0}}, tau10, "frugal_dgp2", true);
  add("frugal_dgp3", "three-covariate copula process", frugal(frugal_dgp3(false)),
      ThetaVector{{"tau", 5.0}}, tau10, "frugal_dgp3");
  add("frugal_sim3", "frugal_dgp3 with the effect size free", frugal(frugal_dgp3(false)),
      ThetaVector{{"tau", 5.0}}, tau10, "frugal_dgp3");
  add("frugal_sim3u", "frugal_dgp3 with x2 hidden", frugal(frugal_dgp3(true)),
      ThetaVector{{"tau", 5.0}, {"rho", -0.3}}, tau10_rho, "frugal_sim3u");
  add("frugal_dgp4", "four gamma covariates", frugal(frugal_dgp4(false)),
      ThetaVector{{"tau", 5.0}}, box({{"tau", -20.0, 20.0}}), "frugal_dgp4");
  add("frugal_sim4u", "frugal_dgp4 with x4 hidden", frugal(frugal_dgp4(true)),
      ThetaVector{{"tau", 5.0}, {"rho", 0.8}}, tau20_rho, "frugal_sim4u");
  add("frugal_dgp5", "five gamma and five binary covariates", frugal(frugal_dgp5(false)),
      ThetaVector{{"tau", -5.0}}, box({{"tau", -20.0, 20.0}}), "frugal_dgp5");
  add("frugal_sim5u", "frugal_dgp5 with x3 and x7 hidden", frugal(frugal_dgp5(true)),
      ThetaVector{{"tau", -5.0}, {"rho", 0.0}}, tau20_rho, "frugal_sim5u");
  return c;
}

}  // namespace

const std::vector<CatalogEntry>& builtin_catalog() {
  static const std::vector<CatalogEntry> catalog = build();
  return catalog;
}

const CatalogEntry& catalog_entry(const std::string& id) {
  for (const auto& e : builtin_catalog()) {
    if (e.id == id) return e;
  }
  throw ConfigError("unknown builtin simulator '" + id + "'");
}

FrugalConfig frugal_config(const std::string& id) {
  const auto& e = catalog_entry(id);
  if (const auto* f = std::get_if<FrugalConfig>(&e.simulator.variant)) return *f;
  throw ConfigError("'" + id + "' is not a frugal simulator");
}

}  // namespace sbice
