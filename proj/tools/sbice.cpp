// Command-line entry point. Exit codes: 0 success, 2 config error,
// 3 runtime or simulation error, 4 worker protocol error.
#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sbice/errors.hpp"
#include "sbice/parallel.hpp"
#include "sbice/run/runner.hpp"

namespace {

int threads_from_env(int fallback) {
  const char* env = std::getenv("SBICE_THREADS");
  if (!env || !*env) return fallback;
  try {
    std::size_t used = 0;
    const int n = std::stoi(env, &used);
    if (used != std::string(env).size() || n < 0) throw std::invalid_argument(env);
    return n;
  } catch (const std::exception&) {
    throw sbice::ConfigError(std::string("SBICE_THREADS: expected a non-negative integer, got '") +
                             env + "'");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation-based inference for causal evaluation"};
  app.require_subcommand(1);
  std::string config_path;
  int threads = 0;
  bool resume = false;
  int stop_after = -1;
  std::string regime = "both";

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Run configuration (JSON)")->required();
    sub->add_option("--threads", threads, "Worker threads; 0 uses all cores")->check(CLI::NonNegativeNumber);
  };
  auto* simulate = app.add_subcommand("simulate", "Write the source dataset");
  auto* infer = app.add_subcommand("infer", "Run SMC-ABC against the source");
  auto* generate = app.add_subcommand("generate", "Emit posterior and/or prior datasets");
  auto* evaluate = app.add_subcommand("evaluate", "Classifier AUC and estimator BSE");
  auto* report = app.add_subcommand("report", "Write summary.md");
  for (auto* s : {simulate, infer, generate, evaluate, report}) add_common(s);
  infer->add_flag("--resume", resume, "Continue from the last sealed generation");
  infer->add_option("--stop-after-generation", stop_after, "Stop once this generation is sealed")
      ->check(CLI::NonNegativeNumber);
  generate->add_option("--regime", regime, "posterior, prior or both")
      ->check(CLI::IsMember({"posterior", "prior", "both"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    sbice::set_thread_count(static_cast<std::size_t>(threads_from_env(threads)));
    const sbice::RunConfig cfg = sbice::load_run_config(config_path);
    if (simulate->parsed()) {
      sbice::cmd_simulate(cfg);
    } else if (infer->parsed()) {
      sbice::InferOptions opts;
      opts.resume = resume;
      if (stop_after >= 0) opts.stop_after_generation = stop_after;
      const auto reason = sbice::cmd_infer(cfg, opts);
      std::cerr << "termination: " << sbice::to_string(reason) << "\n";
    } else if (generate->parsed()) {
      std::vector<sbice::Regime> regimes;
      if (regime != "prior") regimes.push_back(sbice::Regime::posterior);
      if (regime != "posterior") regimes.push_back(sbice::Regime::prior);
      sbice::cmd_generate(cfg, regimes);
    } else if (evaluate->parsed()) {
      sbice::cmd_evaluate(cfg);
    } else if (report->parsed()) {
      sbice::cmd_report(cfg);
    }
  } catch (const sbice::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const sbice::ProtocolError& e) {
    std::cerr << "worker protocol error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
