#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sbice/data/dataset.hpp"
#include "sbice/distance/sliced_wasserstein.hpp"
#include "sbice/sim/simulator.hpp"
#include "sbice/smc/prior.hpp"

namespace sbice {

struct Particle {
  ThetaVector theta;
  double weight = 0.0;
  double distance = 0.0;
};

struct Population {
  int generation = 0;
  double epsilon = 0.0;
  std::vector<Particle> particles;
  double ess = 0.0;
  /// Simulations spent on this generation (the pilot counts toward generation 0).
  std::int64_t simulations = 0;
};

enum class TerminationReason {
  min_epsilon_reached,
  max_generations,
  budget_exhausted,
  /// The caller's population callback asked to stop; the run can be resumed.
  interrupted,
};

std::string to_string(TerminationReason r);
std::optional<TerminationReason> parse_termination_reason(const std::string& s);

struct SmcConfig {
  int population_size = 128;
  int max_generations = 12;
  double min_epsilon = 0.005;
  double epsilon_quantile = 0.5;
  double kernel_scale = 2.0;
  DistanceConfig distance;
  /// Candidate simulations allowed per generation; 0 selects 200 x population_size.
  std::int64_t max_simulations_per_generation = 0;
  std::uint64_t master_seed = 0;

  void validate() const;
  std::int64_t budget() const;
};

struct RunResult {
  std::vector<Population> populations;
  std::int64_t simulation_count = 0;
  TerminationReason reason = TerminationReason::max_generations;

  /// SimulationError when no generation completed.
  const Population& final_population() const;
};

struct SmcCallbacks {
  /// Called after each sealed generation; returning false stops the run with
  /// reason `interrupted`.
  std::function<bool(const Population&)> on_population;
};

/// SMC-ABC over the prior. `resume` holds already sealed generations
/// (0..k, in order) of a run with the same configuration; the run continues
/// from generation k+1 and reproduces an uninterrupted run exactly.
RunResult run_smcabc(const PriorSpec& prior, const Simulator& simulator, const Dataset& source,
                     const SmcConfig& cfg, const std::vector<Population>& resume = {},
                     const SmcCallbacks& callbacks = {});

double effective_sample_size(std::span<const double> weights);
double effective_sample_size(const Population& population);

/// Linear-interpolation (type 7) quantile.
double quantile_type7(std::vector<double> values, double q);

/// Weighted mean and variance (population convention) of one parameter.
std::pair<double, double> weighted_moments(const Population& population,
                                           const std::string& parameter);

/// Index drawn with probability proportional to weight, from one uniform.
std::size_t weighted_index(std::span<const double> cumulative, double u);

std::vector<GeneratedDataset> emit_posterior(const Population& population,
                                             const Simulator& simulator, int count,
                                             const RandomStream& stream, Eigen::Index n);
std::vector<GeneratedDataset> emit_prior(const PriorSpec& prior, const Simulator& simulator,
                                         int count, const RandomStream& stream, Eigen::Index n);

/// Columns: generation, particle_index, weight, distance, then one per parameter.
void write_populations_csv(const std::vector<Population>& populations,
                           const std::vector<std::string>& parameters,
                           const std::filesystem::path& path);

/// Reads particles back; epsilon, ess and simulations are not stored in the
/// CSV and are left for the caller to restore.
std::vector<Population> read_populations_csv(const std::filesystem::path& path,
                                             const std::vector<std::string>& parameters);

}  // namespace sbice
