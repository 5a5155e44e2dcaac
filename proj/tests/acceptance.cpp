// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails. Usage: acceptance [--workdir DIR] [--only N]...
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sbice/distance/sliced_wasserstein.hpp"
#include "sbice/eval/evaluation.hpp"
#include "sbice/parallel.hpp"
#include "sbice/run/runner.hpp"
#include "sbice/sim/catalog.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace sbice;

namespace {

fs::path g_workdir = fs::temp_directory_path() / "sbice_acceptance";

struct Check {
  std::string text;
  bool ok;
};

class Report {
 public:
  void add(bool ok, const std::string& text) { checks_.push_back({text, ok}); }
  bool ok() const {
    return std::all_of(checks_.begin(), checks_.end(), [](const Check& c) { return c.ok; });
  }
  std::string text() const {
    std::string s;
    for (const auto& c : checks_) s += (s.empty() ? "" : "; ") + c.text + (c.ok ? "" : " [x]");
    return s;
  }

 private:
  std::vector<Check> checks_;
};

std::string f(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

double minutes_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
}

RunConfig make_config(const std::string& name, json j) {
  const fs::path dir = g_workdir / name;
  fs::remove_all(dir);
  j["output_dir"] = dir.string();
  return parse_run_config(j.dump(), g_workdir);
}

json load_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

Population final_population(const RunConfig& cfg) {
  return read_populations_csv(cfg.output_dir / "populations.csv", cfg.prior.names()).back();
}

double weighted_mean(const Population& pop, const std::function<double(const ThetaVector&)>& g) {
  double s = 0.0, w = 0.0;
  for (const auto& p : pop.particles) {
    s += p.weight * g(p.theta);
    w += p.weight;
  }
  return s / w;
}

double weighted_sd(const Population& pop, const std::function<double(const ThetaVector&)>& g) {
  const double m = weighted_mean(pop, g);
  return std::sqrt(weighted_mean(pop, [&](const ThetaVector& t) { return std::pow(g(t) - m, 2); }));
}

int bse_improvements(const json& metrics, int* total) {
  int better = 0;
  *total = 0;
  for (auto it = metrics["bse"].begin(); it != metrics["bse"].end(); ++it) {
    ++*total;
    const json& post = it.value()["posterior"];
    const json& prior = it.value()["prior"];
    if (post.is_number() && prior.is_number() && post.get<double>() < prior.get<double>()) ++better;
  }
  return better;
}

void full_pipeline(const RunConfig& cfg) {
  cmd_simulate(cfg);
  cmd_infer(cfg);
  cmd_generate(cfg, {Regime::posterior, Regime::prior});
  cmd_evaluate(cfg);
  cmd_report(cfg);
}

Report criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig cfg = make_config("sim1", {
      {"master_seed", 101},
      {"source", {{"builtin", "dgp1"}, {"n", 2000}}},
      {"simulator", {{"builtin", "sim1"}}},
      {"smc", {{"population_size", 128}, {"max_generations", 12}, {"distance", {{"n_projections", 100}}}}},
      {"emission", {{"n_datasets", 50}}}});
  full_pipeline(cfg);
  const json m = load_json(cfg.output_dir / "metrics.json");
  const double post = m["auc"]["posterior"]["mean"], prior = m["auc"]["prior"]["mean"];
  int total = 0;
  const int better = bse_improvements(m, &total);
  const double tau = weighted_mean(final_population(cfg), [](const ThetaVector& t) { return t.at("tau"); });
  const double mins = minutes_since(t0);
  Report r;
  r.add(post <= 0.60, "AUC post " + f(post) + " <= 0.60");
  r.add(prior >= 0.65, "AUC prior " + f(prior) + " >= 0.65");
  r.add(better >= 6, "BSE post < prior for " + std::to_string(better) + "/" + std::to_string(total) + " (need 6)");
  r.add(tau >= 1.3 && tau <= 1.7, "posterior mean tau " + f(tau) + " in [1.3, 1.7]");
  r.add(mins <= 15.0, "runtime " + f(mins, 1) + " min <= 15");
  return r;
}

Report criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig cfg = make_config("sim6", {
      {"master_seed", 202},
      {"source", {{"builtin", "dgp6"}, {"n", 2000}}},
      {"simulator", {{"builtin", "sim6"}}},
      {"smc", {{"population_size", 128}, {"max_generations", 12}, {"distance", {{"n_projections", 100}}}}}});
  cmd_simulate(cfg);
  cmd_infer(cfg);
  const Population pop = final_population(cfg);
  auto sum = [](const ThetaVector& t) { return t.at("rho") + t.at("tau"); };
  auto tau = [](const ThetaVector& t) { return t.at("tau"); };
  auto beta = [](const ThetaVector& t) { return t.at("beta"); };
  const double ms = weighted_mean(pop, sum), ss = weighted_sd(pop, sum);
  const double st = weighted_sd(pop, tau), mb = weighted_mean(pop, beta);
  const double mins = minutes_since(t0);
  Report r;
  r.add(ms >= 3.7 && ms <= 4.3, "mean(rho+tau) " + f(ms) + " in [3.7, 4.3]");
  r.add(ss <= 0.3, "sd(rho+tau) " + f(ss) + " <= 0.3");
  r.add(st >= 0.5, "sd(tau) " + f(st) + " >= 0.5");
  r.add(mb >= 0.3 && mb <= 0.7, "mean beta " + f(mb) + " in [0.3, 0.7]");
  r.add(mins <= 10.0, "runtime " + f(mins, 1) + " min <= 10");
  return r;
}

Report criterion3() {
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig cfg = make_config("frugal_sim4u", {
      {"master_seed", 303},
      {"source", {{"builtin", "frugal_sim4u"}, {"n", 2000}}},
      {"simulator", {{"builtin", "frugal_sim4u"}}},
      {"smc", {{"population_size", 128}, {"max_generations", 12}, {"distance", {{"n_projections", 100}}}}},
      {"emission", {{"n_datasets", 50}}}});
  full_pipeline(cfg);
  const json m = load_json(cfg.output_dir / "metrics.json");
  const double post = m["auc"]["posterior"]["mean"], prior = m["auc"]["prior"]["mean"];
  int total = 0;
  const int better = bse_improvements(m, &total);
  const double mins = minutes_since(t0);
  Report r;
  r.add(post <= 0.65, "AUC post " + f(post) + " <= 0.65");
  r.add(prior >= 0.85, "AUC prior " + f(prior) + " >= 0.85");
  r.add(better >= 5, "BSE post < prior for " + std::to_string(better) + "/" + std::to_string(total) + " (need 5)");
  r.add(mins <= 20.0, "runtime " + f(mins, 1) + " min <= 20");
  return r;
}

Report criterion4() {
  const double c3 = interventional_ate(LinearModel::c3, {}, 100000, nullptr, RandomStream(404, 3));
  const double c4 = interventional_ate(LinearModel::c4, {}, 100000, nullptr, RandomStream(404, 4));
  Report r;
  r.add(std::abs(c3 - 1.0) <= 0.05, "ATE(C3) " + f(c3) + " = 1 +- 0.05");
  r.add(std::abs(c4 - 1.0) <= 0.05, "ATE(C4) " + f(c4) + " = 1 +- 0.05");
  r.add(std::abs(c3 - c4) <= 0.05, "|difference| " + f(std::abs(c3 - c4)) + " <= 0.05");
  return r;
}

Report criterion5() {
  const RunConfig cfg = make_config("null", {
      {"master_seed", 505},
      {"source", {{"builtin", "null"}, {"n", 200}}},
      {"simulator", {{"builtin", "null"}}},
      {"smc", {{"population_size", 10000}, {"max_generations", 3}}}});
  cmd_simulate(cfg);
  cmd_infer(cfg);
  const Population pop = final_population(cfg);
  Report r;
  for (const auto& b : cfg.prior.bounds()) {
    const double pm = 0.5 * (b.low + b.high), pv = std::pow(b.high - b.low, 2) / 12.0;
    const auto [mean, var] = weighted_moments(pop, b.name);
    r.add(std::abs(mean - pm) <= 0.05 * std::abs(pm),
          b.name + " mean " + f(mean) + " vs " + f(pm) + " +-5%");
    r.add(std::abs(var - pv) <= 0.15 * pv, b.name + " var " + f(var) + " vs " + f(pv) + " +-15%");
  }
  return r;
}

Report criterion6() {
  const RunConfig cfg = make_config("sim10", {
      {"master_seed", 606},
      {"source", {{"builtin", "dgp10"}, {"n", 2000}}},
      {"simulator", {{"builtin", "sim10"}}},
      {"smc", {{"population_size", 128}, {"max_generations", 12}, {"distance", {{"n_projections", 100}}}}},
      {"emission", {{"n_datasets", 50}}},
      {"evaluation", {{"estimators", {"diff_means"}}}}});
  full_pipeline(cfg);
  const json m = load_json(cfg.output_dir / "metrics.json");
  const double post = m["auc"]["posterior"]["mean"], prior = m["auc"]["prior"]["mean"];
  bool excluded = false;
  for (const auto& b : cfg.prior.bounds()) {
    const double truth = cfg.source.theta.at(b.name);
    excluded = excluded || truth < b.low || truth > b.high;
  }
  Report r;
  r.add(excluded, "prior excludes the source theta");
  r.add(post <= prior + 0.05, "AUC post " + f(post) + " <= AUC prior " + f(prior) + " + 0.05");
  return r;
}

Dataset rct_fixture(Eigen::Index n, std::uint64_t seed) {
  auto e = RandomStream(seed).engine();
  Eigen::MatrixXd x(n, 1);
  Eigen::VectorXd t(n), y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i, 0) = e.normal();
    t[i] = e.uniform() < 0.5 ? 1.0 : 0.0;
    y[i] = 2.0 * t[i] + x(i, 0) + 0.1 * e.normal();
  }
  return Dataset(x, t, y, {"x1"});
}

std::vector<double> ranks(const Eigen::VectorXd& v) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(v.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v(a) < v(b); });
  std::vector<double> r(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) r[static_cast<std::size_t>(idx[i])] = double(i);
  return r;
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = double(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

std::map<std::string, std::string> run_digests(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file() && e.path().filename() != "manifest.json") {
      out[fs::relative(e.path(), root).string()] = sha256_file(e.path());
    }
  }
  return out;
}

Report criterion7() {
  Report r;
  auto e = RandomStream(707).engine();
  Eigen::MatrixXd a(300, 3), b(250, 3);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = e.normal();
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = 1.0 + 2.0 * e.normal();

  const ProjectionSet dirs = ProjectionSet::random(3, 50, RandomStream(708));
  const double self = sliced_wasserstein(a, a, dirs, 2);
  const double ab = sliced_wasserstein(a, b, dirs, 2), ba = sliced_wasserstein(b, a, dirs, 2);
  r.add(self == 0.0 && std::abs(ab - ba) <= 1e-12, "SW self 0 and symmetric");

  // Single axis against a direct quantile-coupling oracle on equal sizes.
  Eigen::MatrixXd c(300, 3);
  for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = e.uniform() * 4.0 - 1.0;
  Eigen::MatrixXd axis = Eigen::MatrixXd::Zero(3, 1);
  axis(1, 0) = 1.0;
  std::vector<double> ca(a.col(1).data(), a.col(1).data() + 300), cc(c.col(1).data(), c.col(1).data() + 300);
  std::sort(ca.begin(), ca.end());
  std::sort(cc.begin(), cc.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < ca.size(); ++i) acc += (ca[i] - cc[i]) * (ca[i] - cc[i]);
  const double oracle = std::sqrt(acc / double(ca.size()));
  const double projected = sliced_wasserstein(a, c, ProjectionSet(axis), 2);
  r.add(std::abs(projected - oracle) <= 1e-12, "single-axis SW = 1-D W2 (diff " +
                                                   f(std::abs(projected - oracle) * 1e12, 3) + "e-12)");

  const FrugalConfig dgp4 = frugal_config("frugal_dgp4");
  const FrugalDraw draw = frugal_draw(dgp4, {{"tau", 5.0}}, RandomStream(709), 20000);
  double worst = 0.0;
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      const double rho = correlation(ranks(draw.covariates.col(i)), ranks(draw.covariates.col(j)));
      worst = std::max(worst, std::abs(rho - dgp4.correlation(i, j)));
    }
  }
  r.add(worst <= 0.05, "R4 covariate Spearman max error " + f(worst) + " <= 0.05");

  const std::vector<double> s{0.1, 0.4, 0.35, 0.8}, l{0, 0, 1, 1}, lc{1, 1, 0, 0};
  const double auc = roc_auc(s, l);
  r.add(auc == 0.75 && auc + roc_auc(s, lc) == 1.0, "AUC hand example " + f(auc, 2) + ", complement sums to 1");

  const std::vector<AteEstimate> est{{EstimatorId::diff_means, 1.5, ""}, {EstimatorId::diff_means, 0.5, ""}};
  const std::vector<double> taus{1.0, 1.0};
  const double bse = *mean_bse(est, taus, 2.0, 2.0).value;
  r.add(std::abs(bse - 0.25) <= 1e-15, "BSE hand example " + f(bse, 2));

  const std::vector<double> w{0.5, 0.25, 0.25};
  const double ess = effective_sample_size(w);
  r.add(std::abs(ess - 2.667) <= 1e-3, "ESS hand example " + f(ess));

  const Dataset rct = rct_fixture(5000, 33);
  double worst_rct = 0.0;
  bool all_ok = true;
  for (auto id : all_estimators()) {
    const auto a_hat = estimate_ate(rct, id, LearnerConfig{});
    all_ok = all_ok && a_hat.ok();
    if (a_hat.ok()) worst_rct = std::max(worst_rct, std::abs(*a_hat.value - 2.0));
  }
  r.add(all_ok && worst_rct <= 0.15, "RCT estimators max |ATE - 2| " + f(worst_rct) + " <= 0.15");

  const RunConfig cfg = make_config("determinism", {
      {"master_seed", 77},
      {"source", {{"builtin", "dgp1"}, {"n", 300}}},
      {"simulator", {{"builtin", "sim1"}}},
      {"smc", {{"population_size", 32}, {"max_generations", 3}, {"distance", {{"n_projections", 20}}}}},
      {"emission", {{"n_datasets", 4}}},
      {"evaluation", {{"classifier", {{"n_trees", 20}}}, {"learners", {{"gbt", {{"n_trees", 20}}}}}}}});
  full_pipeline(cfg);
  const auto first = run_digests(cfg.output_dir);
  fs::remove_all(cfg.output_dir);
  full_pipeline(cfg);
  r.add(first == run_digests(cfg.output_dir) && first.size() > 10,
        "pipeline byte-identical across runs (" + std::to_string(first.size()) + " files)");
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--workdir" && i + 1 < argc) {
      g_workdir = argv[++i];
    } else if (arg == "--only" && i + 1 < argc) {
      only.insert(std::stoi(argv[++i]));
    } else {
      std::cerr << "usage: acceptance [--workdir DIR] [--only N]...\n";
      return 2;
    }
  }
  fs::create_directories(g_workdir);

  const std::vector<std::pair<std::string, std::function<Report()>>> criteria{
      {"Sim1 end-to-end", criterion1},
      {"Sim6 non-identifiability", criterion2},
      {"Frugal Sim4(u)", criterion3},
      {"C3/C4 interventional ATE", criterion4},
      {"uninformative simulator", criterion5},
      {"misspecified prior (Sim10)", criterion6},
      {"property suite", criterion7}};

  bool all = true;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    std::string line;
    bool ok = false;
    try {
      const Report r = criteria[k].second();
      ok = r.ok();
      line = r.text();
    } catch (const std::exception& e) {
      line = std::string("error: ") + e.what();
    }
    all = all && ok;
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << id << " (" << criteria[k].first
              << "): " << line << " [" << f(minutes_since(t0), 2) << " min]" << std::endl;
  }
  return all ? 0 : 1;
}
