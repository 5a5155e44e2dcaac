#include <array>
#include <cmath>

#include "sbice/errors.hpp"
#include "sbice/sim/simulator.hpp"

namespace sbice {
namespace {

struct ModelName {
  LinearModel model;
  const char* id;
};

constexpr std::array<ModelName, 22> kNames{{
    {LinearModel::sim1, "sim1"},   {LinearModel::sim2, "sim2"},
    {LinearModel::sim3, "sim3"},   {LinearModel::sim4, "sim4"},
    {LinearModel::sim5, "sim5"},   {LinearModel::sim6, "sim6"},
    {LinearModel::sim7, "sim7"},   {LinearModel::sim8, "sim8"},
    {LinearModel::sim9, "sim9"},   {LinearModel::sim10, "sim10"},
    {LinearModel::sim11, "sim11"}, {LinearModel::dgp1, "dgp1"},
    {LinearModel::dgp5, "dgp5"},   {LinearModel::dgp6, "dgp6"},
    {LinearModel::dgp8, "dgp8"},   {LinearModel::dgp10, "dgp10"},
    {LinearModel::dgp11, "dgp11"}, {LinearModel::c1, "c1"},
    {LinearModel::c2, "c2"},       {LinearModel::c3, "c3"},
    {LinearModel::c4, "c4"},       {LinearModel::null_model, "null"},
}};

enum class Family { additive, polynomial, threshold, three_covariate, fixture, null };

Family family_of(LinearModel m) {
  switch (m) {
    case LinearModel::sim1: case LinearModel::sim2: case LinearModel::sim3:
    case LinearModel::sim4: case LinearModel::sim5: case LinearModel::sim10:
    case LinearModel::dgp1: case LinearModel::dgp10:
      return Family::additive;
    case LinearModel::dgp5:
      return Family::polynomial;
    case LinearModel::sim6: case LinearModel::sim7: case LinearModel::sim8:
    case LinearModel::sim9: case LinearModel::dgp6: case LinearModel::dgp8:
      return Family::threshold;
    case LinearModel::sim11: case LinearModel::dgp11:
      return Family::three_covariate;
    case LinearModel::c1: case LinearModel::c2: case LinearModel::c3: case LinearModel::c4:
      return Family::fixture;
    case LinearModel::null_model:
      return Family::null;
  }
  return Family::null;
}

// Simulators that take X = X from the source dataset.
bool reuses_source_covariates(LinearModel m) {
  switch (m) {
    case LinearModel::sim1: case LinearModel::sim2: case LinearModel::sim3:
    case LinearModel::sim4: case LinearModel::sim5: case LinearModel::sim6:
    case LinearModel::sim7: case LinearModel::sim8: case LinearModel::sim10:
    case LinearModel::sim11:
      return true;
    default:
      return false;
  }
}

int treatment_draw(std::optional<int> forced, double probability, Philox4x32& e) {
  if (forced) return *forced;
  return e.uniform() < probability ? 1 : 0;
}

}  // namespace

std::string to_string(LinearModel m) {
  for (const auto& n : kNames) {
    if (n.model == m) return n.id;
  }
  return "unknown";
}

std::optional<LinearModel> parse_linear_model(const std::string& id) {
  for (const auto& n : kNames) {
    if (id == n.id) return n.model;
  }
  return std::nullopt;
}

std::vector<std::string> linear_parameter_names(LinearModel m) {
  switch (family_of(m)) {
    case Family::additive:
    case Family::polynomial:
    case Family::threshold:
    case Family::null:
      return {"rho", "beta", "tau"};
    case Family::three_covariate:
      return {"tau"};
    case Family::fixture:
      return {};
  }
  return {};
}

LinearDraw draw_linear(LinearModel model, const ThetaVector& theta, Eigen::Index n,
                       const Dataset* source, const RandomStream& stream,
                       std::optional<int> forced_treatment) {
  if (n < 2) throw ConfigError("sample size must be at least 2");
  theta.require_names(linear_parameter_names(model));
  const Family family = family_of(model);
  const Eigen::Index p = family == Family::three_covariate ? 3 : 1;
  const bool bootstrap = reuses_source_covariates(model) && source != nullptr;
  if (bootstrap && source->p() != p) {
    throw ConfigError(to_string(model) + " expects a source with " + std::to_string(p) +
                      " covariate(s), got " + std::to_string(source->p()));
  }

  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd t(n), y(n);
  Eigen::VectorXd latent = Eigen::VectorXd::Zero(n);
  auto e = stream.substream(1).engine();
  if (bootstrap) {
    x = bootstrap_covariates(*source, n, stream.substream(0));
  } else if (family == Family::three_covariate) {
    for (Eigen::Index i = 0; i < n; ++i) {
      x(i, 0) = e.normal();
      x(i, 1) = -std::log(e.uniform()) / 0.5;
      x(i, 2) = 1.0 + e.normal();
    }
  } else if (model == LinearModel::c3 || model == LinearModel::c4) {
    for (Eigen::Index i = 0; i < n; ++i) x(i, 0) = e.uniform() < 0.5 ? 1.0 : 0.0;
  } else {
    for (Eigen::Index i = 0; i < n; ++i) x(i, 0) = e.normal();
  }

  const double rho = theta.find("rho").value_or(0.0);
  const double beta = theta.find("beta").value_or(0.0);
  const double tau = theta.find("tau").value_or(0.0);

  switch (family) {
    case Family::additive: {
      const bool interaction = model == LinearModel::sim4;
      const double noise_sd = model == LinearModel::sim2 ? 1.0 : 0.1;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double z = model == LinearModel::sim3 ? -std::log(e.uniform()) / 0.5
                                                    : e.normal();
        latent(i) = z;
        const double xi = x(i, 0);
        const double extra = interaction ? xi * z : 0.0;
        const double lp = rho * z + beta * xi + extra + 0.1 * e.normal();
        t(i) = treatment_draw(forced_treatment, expit(lp), e);
        y(i) = rho * z + beta * xi + tau * t(i) + extra + noise_sd * e.normal();
      }
      break;
    }
    case Family::polynomial:
      for (Eigen::Index i = 0; i < n; ++i) {
        const double z = e.normal();
        latent(i) = z;
        const double xi = x(i, 0);
        const double lp = rho * z + beta * xi + 0.1 * e.normal();
        t(i) = treatment_draw(forced_treatment, expit(lp), e);
        y(i) = rho * (z * z + z * xi) + beta * (xi * xi - xi * t(i)) + tau * t(i) +
               0.1 * e.normal();
      }
      break;
    case Family::threshold: {
      const double x_weight =
          (model == LinearModel::sim8 || model == LinearModel::dgp8) ? 0.4 : 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double z = e.uniform() < 0.5 ? 1.0 : 0.0;
        latent(i) = z;
        const double xi = x(i, 0);
        const double u = 0.5 * e.uniform();
        t(i) = forced_treatment ? *forced_treatment
                                : (z + x_weight * xi + u >= 0.5 ? 1.0 : 0.0);
        y(i) = rho * z + beta * xi + tau * t(i) + 0.5 * e.uniform();
      }
      break;
    }
    case Family::three_covariate:
      for (Eigen::Index i = 0; i < n; ++i) {
        const double s = x(i, 0) + x(i, 1) + x(i, 2);
        t(i) = treatment_draw(forced_treatment, expit(s / 3.0 + 0.1 * e.normal()), e);
        y(i) = s + tau * t(i) + 0.1 * e.normal();
      }
      break;
    case Family::fixture:
      for (Eigen::Index i = 0; i < n; ++i) {
        const double xi = x(i, 0);
        switch (model) {
          case LinearModel::c1:
            t(i) = treatment_draw(forced_treatment, expit(xi), e);
            y(i) = xi + t(i);
            break;
          case LinearModel::c2:
            // g(X, T) = X T xi with exogenous xi ~ N(0, 1), so
            // g - E[g | X, T] = X T xi keeps E[Y | X, T] of C1.
            t(i) = treatment_draw(forced_treatment, expit(xi), e);
            y(i) = xi + t(i) + xi * t(i) * e.normal();
            break;
          case LinearModel::c3: {
            t(i) = treatment_draw(forced_treatment, expit(2.0 * xi), e);
            const double z1 = e.uniform() < 0.5 ? 1.0 : 0.0;
            latent(i) = z1;
            y(i) = xi + t(i) + z1 - 0.5 + e.normal();
            break;
          }
          default: {
            t(i) = treatment_draw(forced_treatment, expit(2.0 * xi), e);
            const double z2 = 0.5 + e.normal();
            latent(i) = z2;
            y(i) = xi + t(i) + z2 - 0.5 + e.normal();
            break;
          }
        }
      }
      break;
    case Family::null:
      for (Eigen::Index i = 0; i < n; ++i) {
        t(i) = treatment_draw(forced_treatment, 0.5, e);
        y(i) = e.normal();
      }
      break;
  }

  std::vector<std::string> names;
  if (p == 1) {
    names = {"x"};
  } else {
    names = {"x1", "x2", "x3"};
  }
  return LinearDraw{Dataset(std::move(x), std::move(t), std::move(y), std::move(names)),
                    std::move(latent)};
}

Dataset simulate_linear(LinearModel model, const ThetaVector& theta, Eigen::Index n,
                        const Dataset* source, const RandomStream& stream,
                        std::optional<int> forced_treatment) {
  return draw_linear(model, theta, n, source, stream, forced_treatment).dataset;
}

double interventional_ate(LinearModel model, const ThetaVector& theta, Eigen::Index n,
                          const Dataset* source, const RandomStream& stream) {
  const Dataset treated = simulate_linear(model, theta, n, source, stream.substream(11), 1);
  const Dataset control = simulate_linear(model, theta, n, source, stream.substream(12), 0);
  return treated.outcome().mean() - control.outcome().mean();
}

}  // namespace sbice
