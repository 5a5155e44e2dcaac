#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "sbice/errors.hpp"
#include "sbice/run/config.hpp"
#include "sbice/run/runner.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sbice;

namespace {

struct Outcome {
  int code = -1;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("sbice_cli_" + std::string(info->name()) + "_" +
                                        std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  static json small_config() {
    return json::parse(R"({
      "master_seed": 42,
      "output_dir": "out",
      "source": {"builtin": "dgp1", "n": 200},
      "simulator": {"builtin": "sim1"},
      "smc": {"population_size": 16, "max_generations": 3, "distance": {"n_projections": 10}},
      "emission": {"n_datasets": 3},
      "evaluation": {"classifier": {"n_trees": 10}, "learners": {"gbt": {"n_trees": 10}}}
    })");
  }

  fs::path write_config(const json& j, const std::string& name = "cfg.json") {
    const fs::path p = dir_ / name;
    std::ofstream(p) << j.dump(2);
    return p;
  }

  Outcome run(const std::string& args, const std::string& env = "") {
    const fs::path err = dir_ / "stderr.txt";
    const std::string cmd = env + " " + SBICE_BIN + " " + args + " 2> " + err.string();
    const int status = std::system(cmd.c_str());
    Outcome o;
    o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(err);
    std::stringstream ss;
    ss << in.rdbuf();
    o.err = ss.str();
    return o;
  }

  Outcome pipeline(const fs::path& cfg) {
    for (const char* cmd : {"simulate", "infer", "generate", "evaluate", "report"}) {
      Outcome o = run(std::string(cmd) + " --config " + cfg.string());
      if (o.code != 0) return o;
    }
    return {0, ""};
  }

  // Digest of every file under the run directory except the manifest, which
  // carries timestamps.
  std::map<std::string, std::string> digests(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
      if (!e.is_regular_file() || e.path().filename() == "manifest.json") continue;
      out[fs::relative(e.path(), root).string()] = sha256_file(e.path());
    }
    return out;
  }

  json manifest(const fs::path& root) {
    std::ifstream in(root / "manifest.json");
    return json::parse(in);
  }

  fs::path dir_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_F(Cli, PipelineIsByteDeterministic) {
  const fs::path cfg = write_config(small_config());
  ASSERT_EQ(pipeline(cfg).code, 0);
  const auto first = digests(dir_ / "out");
  for (const char* f : {"config.json", "source.csv", "populations.csv", "metrics.json", "summary.md",
                        "datasets/posterior/thetas.csv", "datasets/prior/dataset_2.csv",
                        "plots_data/bias_long.csv", "plots_data/posterior_samples.csv"}) {
    EXPECT_TRUE(first.count(f)) << f;
  }
  const json m = manifest(dir_ / "out");
  for (const auto& [rel, digest] : first) {
    if (rel == "config.json") continue;
    ASSERT_TRUE(m["artifacts"].contains(rel)) << rel;
    EXPECT_EQ(m["artifacts"][rel]["status"], "complete") << rel;
    EXPECT_EQ(m["artifacts"][rel]["sha256"], digest) << rel;
  }
  fs::remove_all(dir_ / "out");
  ASSERT_EQ(pipeline(cfg).code, 0);
  EXPECT_EQ(digests(dir_ / "out"), first);
}

TEST_F(Cli, ThreadCountDoesNotChangeArtifacts) {
  const fs::path cfg = write_config(small_config());
  ASSERT_EQ(run("simulate --config " + cfg.string()).code, 0);
  ASSERT_EQ(run("infer --threads 1 --config " + cfg.string()).code, 0);
  const std::string one = slurp(dir_ / "out/populations.csv");
  ASSERT_EQ(run("infer --threads 1 --config " + cfg.string(), "SBICE_THREADS=3").code, 0);
  EXPECT_EQ(slurp(dir_ / "out/populations.csv"), one);
}

TEST_F(Cli, ResumeMatchesUninterruptedRun) {
  const fs::path cfg = write_config(small_config());
  ASSERT_EQ(run("simulate --config " + cfg.string()).code, 0);
  ASSERT_EQ(run("infer --config " + cfg.string()).code, 0);
  const std::string full = slurp(dir_ / "out/populations.csv");
  const json full_gens = manifest(dir_ / "out")["commands"]["infer"]["generations"];

  ASSERT_EQ(run("infer --stop-after-generation 0 --config " + cfg.string()).code, 0);
  json m = manifest(dir_ / "out");
  EXPECT_EQ(m["commands"]["infer"]["status"], "interrupted");
  EXPECT_EQ(m["commands"]["infer"]["termination_reason"], "interrupted");
  EXPECT_EQ(m["commands"]["infer"]["generations"].size(), 1u);
  ASSERT_EQ(run("generate --regime posterior --config " + cfg.string()).code, 3);

  ASSERT_EQ(run("infer --resume --config " + cfg.string()).code, 0);
  EXPECT_EQ(slurp(dir_ / "out/populations.csv"), full);
  m = manifest(dir_ / "out");
  EXPECT_EQ(m["commands"]["infer"]["status"], "complete");
  EXPECT_EQ(m["commands"]["infer"]["resumed_from"], 0);
  EXPECT_EQ(m["commands"]["infer"]["generations"], full_gens);
}

TEST_F(Cli, ResumeRejectsChangedConfig) {
  json j = small_config();
  const fs::path cfg = write_config(j);
  ASSERT_EQ(run("simulate --config " + cfg.string()).code, 0);
  ASSERT_EQ(run("infer --stop-after-generation 0 --config " + cfg.string()).code, 0);
  j["smc"]["kernel_scale"] = 1.0;
  const fs::path changed = write_config(j);
  const Outcome o = run("infer --resume --config " + changed.string());
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.err.find("resumed"), std::string::npos) << o.err;
}

TEST_F(Cli, EpsilonsStrictlyDecreaseAndMinEpsilonReported) {
  json j = small_config();
  const fs::path cfg = write_config(j);
  ASSERT_EQ(run("simulate --config " + cfg.string()).code, 0);
  ASSERT_EQ(run("infer --config " + cfg.string()).code, 0);
  const json gens = manifest(dir_ / "out")["commands"]["infer"]["generations"];
  for (std::size_t g = 1; g < gens.size(); ++g) {
    EXPECT_LT(gens[g]["epsilon"].get<double>(), gens[g - 1]["epsilon"].get<double>());
  }
  j["smc"]["min_epsilon"] = 50.0;
  ASSERT_EQ(run("infer --config " + write_config(j).string()).code, 0);
  EXPECT_EQ(manifest(dir_ / "out")["commands"]["infer"]["termination_reason"], "min_epsilon_reached");
}

TEST_F(Cli, BadConfigExitsWithFieldPath) {
  json j = small_config();
  j["smc"]["populaton_size"] = 10;
  Outcome o = run("simulate --config " + write_config(j).string());
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.err.find("smc.populaton_size"), std::string::npos) << o.err;
  EXPECT_FALSE(fs::exists(dir_ / "out"));

  j = small_config();
  j["emission"]["n_datasets"] = "many";
  o = run("simulate --config " + write_config(j).string());
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.err.find("emission.n_datasets"), std::string::npos) << o.err;

  j = small_config();
  j["prior"] = {{"parameters", {{{"name", "tau"}, {"low", 0}, {"high", 2}}}}};
  o = run("simulate --config " + write_config(j).string());
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.err.find("prior.parameters"), std::string::npos) << o.err;

  o = run("simulate --config " + (dir_ / "missing.json").string());
  EXPECT_EQ(o.code, 2);
  o = run("simulate");
  EXPECT_EQ(o.code, 2);
}

TEST_F(Cli, CsvSourceWithBadSchemaExitsTwo) {
  std::ofstream(dir_ / "src.csv") << "x,treat,y\n0.1,1,2\n0.2,0,1\n0.3,1,2\n";
  json j = small_config();
  j["source"] = {{"csv", "src.csv"}, {"treatment_column", "t"}};
  const Outcome o = run("simulate --config " + write_config(j).string());
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.err.find("source"), std::string::npos) << o.err;

  j["source"] = {{"csv", "src.csv"}, {"treatment_column", "treat"}};
  j["evaluation"]["source_tau_star"] = 1.0;
  EXPECT_EQ(run("simulate --config " + write_config(j).string()).code, 0);
  EXPECT_EQ(slurp(dir_ / "out/source.csv"), "x,treat,y\n0.1,1,2\n0.2,0,1\n0.3,1,2\n");
}

TEST_F(Cli, PriorRegimeNeedsNoInference) {
  const fs::path cfg = write_config(small_config());
  ASSERT_EQ(run("simulate --config " + cfg.string()).code, 0);
  const Outcome post = run("generate --regime posterior --config " + cfg.string());
  EXPECT_EQ(post.code, 3);
  EXPECT_NE(post.err.find("sbice infer"), std::string::npos) << post.err;
  ASSERT_EQ(run("generate --regime prior --config " + cfg.string()).code, 0);

  std::ifstream in(dir_ / "out/datasets/prior/thetas.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "dataset_index,rho,beta,tau,tau_star");
  int rows = 0;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    ASSERT_EQ(cells.size(), 5u);
    EXPECT_EQ(cells[3], cells[4]);
    ++rows;
  }
  EXPECT_EQ(rows, 3);
  EXPECT_EQ(run("evaluate --config " + cfg.string()).code, 0);
}

TEST_F(Cli, ReportWithoutMetricsIsActionable) {
  const fs::path cfg = write_config(small_config());
  const Outcome o = run("report --config " + cfg.string());
  EXPECT_EQ(o.code, 3);
  EXPECT_NE(o.err.find("metrics.json"), std::string::npos) << o.err;
  EXPECT_NE(o.err.find("sbice evaluate"), std::string::npos) << o.err;
}

TEST_F(Cli, SummaryHasBseTableAndParameterQuantiles) {
  const fs::path cfg = write_config(small_config());
  ASSERT_EQ(pipeline(cfg).code, 0);
  const std::string md = slurp(dir_ / "out/summary.md");
  EXPECT_NE(md.find("| Estimator | Posterior | Prior |"), std::string::npos);
  for (const char* name : {"Diff. Means", "X (Lin)", "X (GBT)", "DML (Lin)", "DML (GBT)", "DR (Lin)", "TMLE"}) {
    EXPECT_NE(md.find(std::string("| ") + name + " |"), std::string::npos) << name;
  }
  EXPECT_NE(md.find("| Parameter | Mean | SD | 5% | 95% |"), std::string::npos);
  for (const char* p : {"| rho |", "| beta |", "| tau |"}) EXPECT_NE(md.find(p), std::string::npos);

  const json metrics = json::parse(slurp(dir_ / "out/metrics.json"));
  EXPECT_EQ(metrics["auc"]["posterior"]["per_dataset"].size(), 3u);
  EXPECT_EQ(metrics["classifier_columns"], "all");
  EXPECT_EQ(metrics["source"]["tau_star"], 1.5);
  EXPECT_EQ(metrics["bse"].size(), 7u);
}

TEST_F(Cli, EstimatorFailuresAreCountedNotNan) {
  json j = small_config();
  j["emission"]["dataset_n"] = 8;
  j["smc"]["max_generations"] = 1;
  const fs::path cfg = write_config(j);
  ASSERT_EQ(pipeline(cfg).code, 0);
  const std::string text = slurp(dir_ / "out/metrics.json");
  EXPECT_EQ(text.find("NaN"), std::string::npos);
  EXPECT_EQ(text.find("nan"), std::string::npos);
  const json metrics = json::parse(text);
  EXPECT_GT(metrics["bse"]["dml_gbt"]["n_failed"]["prior"].get<int>(), 0);
  EXPECT_TRUE(metrics["bse"]["dml_gbt"]["prior"].is_null());
  EXPECT_TRUE(metrics["bse"]["diff_means"]["prior"].is_number());
}

TEST_F(Cli, ExternalWorkerDrivesInference) {
  json j = small_config();
  j["simulator"] = {{"external",
                     {{"command", {SBICE_FAKE_WORKER, "echo"}}, {"parameters", {"tau"}}, {"timeout_seconds", 10}}}};
  j["prior"] = {{"parameters", {{{"name", "tau"}, {"low", 0}, {"high", 3}}}}};
  j["smc"]["max_generations"] = 2;
  const fs::path cfg = write_config(j);
  ASSERT_EQ(run("simulate --config " + cfg.string()).code, 0);
  const Outcome ok = run("infer --config " + cfg.string());
  EXPECT_EQ(ok.code, 0) << ok.err;

  j["simulator"]["external"]["command"] = {SBICE_FAKE_WORKER, "exit3"};
  const Outcome bad = run("infer --config " + write_config(j).string());
  EXPECT_EQ(bad.code, 4) << bad.err;
}

TEST(RunConfig, ResolvedEchoRoundTrips) {
  const std::string text = R"({
    "master_seed": 7,
    "output_dir": "/tmp/x",
    "source": {"builtin": "frugal_sim4u", "n": 500},
    "simulator": {"frugal": {
      "covariates": [
        {"name": "a", "margin": {"kind": "gamma", "params": [1, 1]}},
        {"name": "b", "margin": {"kind": "student_t", "params": [0, 1, 3]}},
        {"name": "h", "margin": {"kind": "bernoulli", "params": [0.5]}, "hidden": true}],
      "propensity_coefficients": [0.5, -0.5, 0.2],
      "propensity_interactions": [{"first": 0, "second": 1, "coefficient": 0.1}],
      "correlation": [[1, 0.2, 0, 0.3], [0.2, 1, 0, 0.1], [0, 0, 1, 0.4], [0.3, 0.1, 0.4, 1]],
      "rho_override": true}},
    "prior": {"parameters": [{"name": "tau", "low": -20, "high": 20}, {"name": "rho", "low": -1, "high": 1}]},
    "evaluation": {"estimators": ["tmle", "diff_means"], "source_tau_star": 5.0}
  })";
  const RunConfig a = parse_run_config(text, "/");
  const std::string echo = resolved_config_json(a);
  const RunConfig b = parse_run_config(echo, "/");
  EXPECT_EQ(resolved_config_json(b), echo);
  EXPECT_EQ(a.simulator.sample_size, 500);
  EXPECT_EQ(a.evaluation.estimators.size(), 2u);
  EXPECT_NE(a.smc.master_seed, a.smc.distance.projection_seed);
}

TEST(RunConfig, DerivedSeedsFollowMasterSeed) {
  const auto make = [](int seed) {
    return parse_run_config(R"({"master_seed": )" + std::to_string(seed) +
                                R"(, "output_dir": "o", "source": {"builtin": "dgp6"}, "simulator": {"builtin": "sim6"}})",
                            ".");
  };
  const RunConfig a = make(1), b = make(1), c = make(2);
  EXPECT_EQ(a.smc.master_seed, b.smc.master_seed);
  EXPECT_NE(a.smc.master_seed, c.smc.master_seed);
  EXPECT_NE(a.evaluation.classifier.seed, c.evaluation.classifier.seed);
  EXPECT_EQ(a.source.theta, (ThetaVector{{"rho", 2.0}, {"beta", 0.5}, {"tau", 2.0}}));
  EXPECT_EQ(a.evaluation.source_tau_star, 2.0);
  EXPECT_EQ(a.prior.dimension(), 3u);
}

TEST(RunConfig, RctTauNeedsCsv) {
  EXPECT_THROW(parse_run_config(R"({"master_seed": 1, "output_dir": "o", "source": {"builtin": "dgp1"},
      "simulator": {"builtin": "sim1"}, "evaluation": {"source_tau_star": "diff_means_of_rct"}})",
                                "."),
               ConfigError);
  try {
    parse_run_config(R"({"master_seed": 1, "output_dir": "o", "source": {"builtin": "dgp1"},
      "simulator": {"frugal": {"covariates": [{"name": "a", "margin": {"kind": "weibull", "params": [1]}}]}}})",
                     ".");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("simulator.frugal.covariates[0].margin.kind"), std::string::npos)
        << e.what();
  }
}
