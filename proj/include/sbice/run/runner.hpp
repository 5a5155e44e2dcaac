#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sbice/run/config.hpp"

namespace sbice {

enum class Regime { posterior, prior };
std::string to_string(Regime r);

struct InferOptions {
  /// Continue from the last sealed generation of an earlier run.
  bool resume = false;
  /// Stop (reason `interrupted`) once this generation is sealed.
  std::optional<int> stop_after_generation;
};

/// Commands take an already validated config (see load_run_config) and
/// write into cfg.output_dir.

/// Writes source.csv. Builtin sources are generated at source.theta; csv
/// sources are validated and rewritten in canonical form.
void cmd_simulate(const RunConfig& cfg);

/// Runs SMC-ABC against source.csv and persists populations.csv after every
/// sealed generation. Returns the termination reason.
TerminationReason cmd_infer(const RunConfig& cfg, const InferOptions& options = {});

/// datasets/<regime>/dataset_<i>.csv plus thetas.csv.
void cmd_generate(const RunConfig& cfg, const std::vector<Regime>& regimes);

/// metrics.json, plots_data/bias_long.csv and plots_data/posterior_samples.csv.
void cmd_evaluate(const RunConfig& cfg);

/// summary.md from metrics.json and the final population.
void cmd_report(const RunConfig& cfg);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Reads a CSV whose last two header columns are treatment and outcome.
Dataset read_run_csv(const std::filesystem::path& path);

/// Weighted quantile of the final-population parameter: the smallest value
/// whose cumulative normalized weight reaches q.
double weighted_quantile(const Population& population, const std::string& name, double q);

}  // namespace sbice
