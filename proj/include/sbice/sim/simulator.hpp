#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sbice/data/dataset.hpp"
#include "sbice/sim/theta.hpp"
#include "sbice/stat/copula.hpp"
#include "sbice/stat/distributions.hpp"
#include "sbice/stat/random.hpp"

namespace sbice {

/// Parametric structural models: the LinearParam simulators and their source
/// DGPs, the identification fixtures C1-C4, and a null model whose output
/// does not depend on theta.
enum class LinearModel {
  sim1, sim2, sim3, sim4, sim5, sim6, sim7, sim8, sim9, sim10, sim11,
  dgp1, dgp5, dgp6, dgp8, dgp10, dgp11,
  c1, c2, c3, c4,
  null_model,
};

std::string to_string(LinearModel m);
std::optional<LinearModel> parse_linear_model(const std::string& id);
std::vector<std::string> linear_parameter_names(LinearModel m);

struct BuiltinLinearConfig {
  LinearModel model = LinearModel::sim1;
};

struct FrugalCovariate {
  std::string name;
  DistributionSpec margin;
  bool hidden = false;
};

struct PropensityInteraction {
  std::size_t first = 0;
  std::size_t second = 0;
  double coefficient = 0.0;
};

/// Frugal parameterization: covariate margins joined with the causal margin
/// Y | do(T) ~ Normal(margin_intercept + tau T, margin_sd) by a Gaussian
/// copula. `correlation` is on the Spearman scale over (covariates...,
/// causal margin). When rho_override is set, the parameter rho replaces every
/// hidden-covariate <-> causal-margin entry.
struct FrugalConfig {
  std::vector<FrugalCovariate> covariates;
  double propensity_intercept = 0.0;
  std::vector<double> propensity_coefficients;
  std::vector<PropensityInteraction> propensity_interactions;
  double margin_intercept = 0.0;
  double margin_sd = 1.0;
  CorrelationMatrix correlation = CorrelationMatrix::identity(2);
  bool rho_override = false;

  void validate() const;
  std::vector<std::string> parameter_names() const;
  CorrelationMatrix resolved_correlation(const ThetaVector& theta) const;
};

enum class WorkerMode { oneshot, persistent };

struct ExternalConfig {
  std::vector<std::string> command;
  std::filesystem::path working_dir = ".";
  double timeout_seconds = 60.0;
  WorkerMode mode = WorkerMode::persistent;
  std::vector<std::string> parameters;
  std::string treatment_column = "t";
  std::string outcome_column = "y";
};

struct SimulatorConfig {
  std::variant<BuiltinLinearConfig, FrugalConfig, ExternalConfig> variant;
  Eigen::Index sample_size = 2000;
  /// Covariate pool for the simulators that reuse source covariates.
  std::shared_ptr<const Dataset> source;

  void validate() const;
  std::vector<std::string> parameter_names() const;
};

struct GeneratedDataset {
  Dataset dataset;
  ThetaVector theta;
  /// theta["tau"] when the model has a tau parameter.
  std::optional<double> tau_star;
};

class ExternalWorkerPool;

/// Owns whatever state a simulator needs between calls (worker processes for
/// the external variant). simulate() is safe to call from several threads.
class Simulator {
 public:
  explicit Simulator(SimulatorConfig config);
  ~Simulator();
  Simulator(Simulator&&) noexcept;
  Simulator& operator=(Simulator&&) noexcept;

  const SimulatorConfig& config() const { return config_; }
  std::vector<std::string> parameter_names() const { return config_.parameter_names(); }

  GeneratedDataset simulate(const ThetaVector& theta, const RandomStream& stream) const;
  GeneratedDataset simulate(const ThetaVector& theta, const RandomStream& stream,
                            Eigen::Index n) const;

 private:
  SimulatorConfig config_;
  std::unique_ptr<ExternalWorkerPool> pool_;
};

GeneratedDataset simulate(const SimulatorConfig& config, const ThetaVector& theta,
                          const RandomStream& stream);

/// Linear models. `source` supplies covariates for the simulators that
/// bootstrap them; without it they fall back to their DGP's covariate law.
/// forced_treatment pins T (interventional draws).
Dataset simulate_linear(LinearModel model, const ThetaVector& theta, Eigen::Index n,
                        const Dataset* source, const RandomStream& stream,
                        std::optional<int> forced_treatment = std::nullopt);

/// A linear-model draw together with its unobserved confounder Z (zeros for
/// models without one). Same stream, same output as simulate_linear.
struct LinearDraw {
  Dataset dataset;
  Eigen::VectorXd confounder;
};

LinearDraw draw_linear(LinearModel model, const ThetaVector& theta, Eigen::Index n,
                       const Dataset* source, const RandomStream& stream,
                       std::optional<int> forced_treatment = std::nullopt);

/// Monte-Carlo ATE: mean outcome under do(T=1) minus under do(T=0), each arm
/// drawn on its own substream.
double interventional_ate(LinearModel model, const ThetaVector& theta, Eigen::Index n,
                          const Dataset* source, const RandomStream& stream);

/// Every quantity of a frugal draw before hidden covariates are dropped.
struct FrugalDraw {
  Eigen::MatrixXd covariate_scores;  // n x k latent normal scores
  Eigen::MatrixXd covariates;        // n x k, all covariates
  Eigen::VectorXd outcome_scores;    // latent causal-margin scores
  Eigen::VectorXd treatment;
  Eigen::VectorXd outcome;
};

FrugalDraw frugal_draw(const FrugalConfig& config, const ThetaVector& theta,
                       const RandomStream& stream, Eigen::Index n);
GeneratedDataset frugal_simulate(const FrugalConfig& config, const ThetaVector& theta,
                                 const RandomStream& stream, Eigen::Index n);

}  // namespace sbice
