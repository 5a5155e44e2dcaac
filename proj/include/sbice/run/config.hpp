#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sbice/data/dataset.hpp"
#include "sbice/eval/evaluation.hpp"
#include "sbice/est/estimators.hpp"
#include "sbice/sim/simulator.hpp"
#include "sbice/smc/prior.hpp"
#include "sbice/smc/smc.hpp"

namespace sbice {

/// Where the source dataset comes from: a catalog generator at a fixed theta,
/// or a CSV file.
struct SourceSpec {
  std::string builtin;
  ThetaVector theta;
  Eigen::Index n = 2000;
  std::filesystem::path csv;
  ColumnSchema schema;
  /// Covariate columns were listed explicitly; otherwise taken from the header.
  bool explicit_covariates = false;

  bool is_builtin() const { return !builtin.empty(); }
};

struct EmissionConfig {
  int n_datasets = 50;
  /// Rows per emitted dataset; defaults to the source size.
  std::optional<Eigen::Index> dataset_n;
};

struct EvaluationConfig {
  std::vector<EstimatorId> estimators = all_estimators();
  ClassifierConfig classifier;
  LearnerConfig learners;
  /// Ground-truth ATE of the source. Defaults to theta["tau"] of a builtin source.
  std::optional<double> source_tau_star;
  /// Take tau* as the difference in means of a randomized dataset.
  bool tau_from_rct = false;
  std::filesystem::path rct_csv;
};

struct RunConfig {
  SourceSpec source;
  /// Catalog id when the simulator came from the catalog.
  std::string simulator_id;
  SimulatorConfig simulator;
  PriorSpec prior;
  SmcConfig smc;
  EmissionConfig emission;
  EvaluationConfig evaluation;
  std::filesystem::path output_dir;
  std::uint64_t master_seed = 0;

  /// ConfigError with a field path on the first problem found.
  void validate() const;
};

/// Parses a JSON document. Relative paths resolve against `base_dir`. Seeds
/// not given explicitly are derived from master_seed.
RunConfig parse_run_config(const std::string& json_text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// The fully resolved configuration (defaults and derived seeds filled in) as
/// pretty-printed JSON. Parsing it back yields the same configuration.
std::string resolved_config_json(const RunConfig& cfg);

}  // namespace sbice
