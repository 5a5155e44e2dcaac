#include <algorithm>
#include <cmath>
#include <regex>

#include "sbice/errors.hpp"
#include "sbice/sim/simulator.hpp"

namespace sbice {
namespace {

// Square-root factor A with A A^T = m; m is PSD but may be singular.
Eigen::MatrixXd covariance_factor(const Eigen::MatrixXd& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  return eig.eigenvectors() *
         eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

}  // namespace

void FrugalConfig::validate() const {
  const auto k = covariates.size();
  if (k == 0) throw ConfigError("frugal config needs at least one covariate");
  static const std::regex label("[A-Za-z0-9_]+");
  std::size_t observed = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const auto& c = covariates[i];
    if (!std::regex_match(c.name, label)) {
      throw ConfigError("frugal covariate " + std::to_string(i) + " has an invalid name");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (covariates[j].name == c.name) {
        throw ConfigError("duplicate frugal covariate '" + c.name + "'");
      }
    }
    c.margin.validate();
    if (!c.hidden) ++observed;
  }
  if (observed == 0) throw ConfigError("frugal config hides every covariate");
  if (propensity_coefficients.size() != k) {
    throw ConfigError("frugal config has " + std::to_string(propensity_coefficients.size()) +
                      " propensity coefficients for " + std::to_string(k) + " covariates");
  }
  for (const auto& term : propensity_interactions) {
    if (term.first >= k || term.second >= k) {
      throw ConfigError("propensity interaction refers to a missing covariate");
    }
  }
  if (!(margin_sd > 0.0) || !std::isfinite(margin_intercept)) {
    throw ConfigError("causal margin needs a finite intercept and sd > 0");
  }
  if (correlation.dim() != static_cast<int>(k) + 1) {
    throw ConfigError("correlation matrix has dimension " +
                      std::to_string(correlation.dim()) + ", expected " +
                      std::to_string(k + 1));
  }
  if (rho_override && observed == k) {
    throw ConfigError("rho_override needs at least one hidden covariate");
  }
}

std::vector<std::string> FrugalConfig::parameter_names() const {
  if (rho_override) return {"tau", "rho"};
  return {"tau"};
}

CorrelationMatrix FrugalConfig::resolved_correlation(const ThetaVector& theta) const {
  if (!rho_override) return correlation;
  const double rho = theta.at("rho");
  const int last = correlation.dim() - 1;
  CorrelationMatrix r = correlation;
  for (int i = 0; i < last; ++i) {
    if (covariates[static_cast<std::size_t>(i)].hidden) r = r.with_entry(i, last, rho);
  }
  return r;
}

FrugalDraw frugal_draw(const FrugalConfig& config, const ThetaVector& theta,
                       const RandomStream& stream, Eigen::Index n) {
  config.validate();
  theta.require_names(config.parameter_names());
  if (n < 1) throw ConfigError("sample size must be positive");
  const double tau = theta.at("tau");
  const Eigen::Index k = static_cast<Eigen::Index>(config.covariates.size());

  const Eigen::MatrixXd pearson = config.resolved_correlation(theta).pearson();
  const Eigen::MatrixXd factor = covariance_factor(pearson.topLeftCorner(k, k));
  const CopulaConditioner conditioner(pearson);

  FrugalDraw out;
  out.covariate_scores.resize(n, k);
  out.covariates.resize(n, k);
  out.outcome_scores.resize(n);
  out.treatment.resize(n);
  out.outcome.resize(n);

  auto e = stream.engine();
  Eigen::VectorXd z(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) z(j) = e.normal();
    const Eigen::VectorXd s = factor * z;
    double lp = config.propensity_intercept;
    for (Eigen::Index j = 0; j < k; ++j) {
      const double x = value_at_score(config.covariates[static_cast<std::size_t>(j)].margin, s(j));
      out.covariate_scores(i, j) = s(j);
      out.covariates(i, j) = x;
      lp += config.propensity_coefficients[static_cast<std::size_t>(j)] * x;
    }
    for (const auto& term : config.propensity_interactions) {
      lp += term.coefficient * out.covariates(i, static_cast<Eigen::Index>(term.first)) *
            out.covariates(i, static_cast<Eigen::Index>(term.second));
    }
    out.treatment(i) = e.uniform() < expit(lp) ? 1.0 : 0.0;
    const ConditionalNormal c =
        conditioner.condition(std::span<const double>(s.data(), static_cast<std::size_t>(k)));
    const double score = c.mean + c.sd * e.normal();
    out.outcome_scores(i) = score;
    out.outcome(i) = config.margin_intercept + tau * out.treatment(i) + config.margin_sd * score;
  }
  return out;
}

GeneratedDataset frugal_simulate(const FrugalConfig& config, const ThetaVector& theta,
                                 const RandomStream& stream, Eigen::Index n) {
  if (n < 2) throw ConfigError("sample size must be at least 2");
  FrugalDraw draw = frugal_draw(config, theta, stream, n);
  std::vector<Eigen::Index> keep;
  std::vector<std::string> names;
  for (std::size_t j = 0; j < config.covariates.size(); ++j) {
    if (config.covariates[j].hidden) continue;
    keep.push_back(static_cast<Eigen::Index>(j));
    names.push_back(config.covariates[j].name);
  }
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    x.col(static_cast<Eigen::Index>(c)) = draw.covariates.col(keep[c]);
  }
  Dataset d(std::move(x), std::move(draw.treatment), std::move(draw.outcome), std::move(names));
  return GeneratedDataset{std::move(d), theta, theta.at("tau")};
}

}  // namespace sbice
