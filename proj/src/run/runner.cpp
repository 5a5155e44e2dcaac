#include "sbice/run/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "sbice/errors.hpp"
#include "sbice/sim/catalog.hpp"

#ifndef SBICE_VERSION
#define SBICE_VERSION "dev"
#endif

namespace sbice {
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr std::uint64_t kSourceTag = 0x50;
constexpr std::uint64_t kEmissionTag = 0xe0;

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void atomic_write(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// Run directory plus its manifest. The manifest is rewritten atomically after
// every state change, so an interrupted command leaves its outputs marked.
class RunDir {
 public:
  explicit RunDir(const RunConfig& cfg) : cfg_(cfg), root_(cfg.output_dir) {
    std::error_code ec;
    fs::create_directories(root_, ec);
    if (ec || !fs::is_directory(root_)) {
      throw ConfigError("output_dir: cannot create " + root_.string() + ": " + ec.message());
    }
    config_ = json::parse(resolved_config_json(cfg));
    const fs::path mpath = root_ / "manifest.json";
    if (fs::exists(mpath)) {
      try {
        manifest_ = json::parse(read_file(mpath));
      } catch (const json::exception& e) {
        throw Error("manifest.json is corrupt: " + std::string(e.what()));
      }
    } else {
      manifest_ = json::object();
      manifest_["version"] = SBICE_VERSION;
      manifest_["created"] = utc_now();
    }
  }

  const fs::path& root() const { return root_; }
  fs::path path(const std::string& rel) const { return root_ / rel; }
  json& manifest() { return manifest_; }
  json& command(const std::string& name) { return manifest_["commands"][name]; }

  bool stored_config_matches() const {
    return manifest_.contains("config") && manifest_.at("config") == config_;
  }

  void begin(const std::string& name) {
    json& c = command(name);
    c = json::object();
    c["status"] = "running";
    c["started"] = utc_now();
    manifest_["version"] = SBICE_VERSION;
    manifest_["config"] = config_;
    manifest_["choices"] = {{"distance_standardized", cfg_.smc.distance.standardize},
                            {"classifier_columns", "all"}};
    atomic_write(path("config.json"), resolved_config_json(cfg_));
    save();
  }

  void finish(const std::string& name, const std::string& status = "complete") {
    command(name)["status"] = status;
    command(name)["finished"] = utc_now();
    save();
  }

  void mark_incomplete(const std::vector<std::string>& rels) {
    for (const auto& r : rels) manifest_["artifacts"][r] = {{"status", "incomplete"}};
    save();
  }

  // Records digests without saving; call save() after a batch.
  void record(const std::string& rel) {
    const fs::path p = path(rel);
    manifest_["artifacts"][rel] = {{"status", "complete"},
                                   {"sha256", sha256_file(p)},
                                   {"bytes", static_cast<std::uint64_t>(fs::file_size(p))}};
  }

  void drop_artifacts_under(const std::string& prefix) {
    if (!manifest_.contains("artifacts")) return;
    json kept = json::object();
    for (auto it = manifest_["artifacts"].begin(); it != manifest_["artifacts"].end(); ++it) {
      if (it.key().rfind(prefix, 0) != 0) kept[it.key()] = it.value();
    }
    manifest_["artifacts"] = kept;
  }

  void save() {
    manifest_["updated"] = utc_now();
    atomic_write(path("manifest.json"), manifest_.dump(2) + "\n");
  }

 private:
  const RunConfig& cfg_;
  fs::path root_;
  json config_;
  json manifest_;
};

Dataset load_source(const RunDir& dir) {
  const fs::path p = dir.path("source.csv");
  if (!fs::exists(p)) {
    throw Error("source.csv not found in " + dir.root().string() + "; run `sbice simulate` first");
  }
  return read_run_csv(p);
}

Simulator make_simulator(const RunConfig& cfg, const Dataset& source) {
  SimulatorConfig sc = cfg.simulator;
  sc.source = std::make_shared<const Dataset>(source);
  return Simulator(std::move(sc));
}

Eigen::Index dataset_n(const RunConfig& cfg, const Dataset& source) {
  return cfg.emission.dataset_n.value_or(source.n());
}

std::vector<Population> load_final_populations(RunDir& dir, const RunConfig& cfg) {
  const fs::path p = dir.path("populations.csv");
  const json& infer = dir.command("infer");
  if (!fs::exists(p) || !infer.is_object() || !infer.contains("generations")) {
    throw Error("no inference results in " + dir.root().string() + "; run `sbice infer` first");
  }
  auto pops = read_populations_csv(p, cfg.prior.names());
  const json& gens = infer.at("generations");
  if (gens.size() != pops.size()) {
    throw Error("populations.csv and manifest.json disagree on the generation count; rerun `sbice infer`");
  }
  for (std::size_t g = 0; g < pops.size(); ++g) {
    pops[g].epsilon = gens[g].at("epsilon").get<double>();
    pops[g].simulations = gens[g].at("simulations").get<std::int64_t>();
  }
  return pops;
}

struct EmittedSet {
  std::vector<GeneratedDataset> datasets;
};

EmittedSet load_emitted(const RunDir& dir, Regime regime, const std::vector<std::string>& params) {
  const fs::path base = dir.path("datasets/" + to_string(regime));
  const fs::path thetas = base / "thetas.csv";
  EmittedSet out;
  std::ifstream in(thetas);
  if (!in) return out;
  std::string line;
  std::getline(in, line);
  const auto header = split_csv_line(line);
  auto column = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError(thetas.string() + ": missing column " + name);
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t idx_col = column("dataset_index");
  const std::size_t tau_col = column("tau_star");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) throw DataError(thetas.string() + ": ragged row");
    GeneratedDataset g{read_run_csv(base / ("dataset_" + cells[idx_col] + ".csv")), {}, {}};
    for (const auto& p : params) g.theta.set(p, std::stod(cells[column(p)]));
    if (!cells[tau_col].empty()) g.tau_star = std::stod(cells[tau_col]);
    out.datasets.push_back(std::move(g));
  }
  return out;
}

json nullable(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string to_string(Regime r) { return r == Regime::posterior ? "posterior" : "prior"; }

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 initialization failed");
  }
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

Dataset read_run_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  std::string header;
  std::getline(in, header);
  if (!header.empty() && header.back() == '\r') header.pop_back();
  const auto cols = split_csv_line(header);
  if (cols.size() < 3) throw DataError(path.string() + ": expected covariates, treatment and outcome");
  return read_csv(path, schema_from_header(header, cols[cols.size() - 2], cols.back()));
}

double weighted_quantile(const Population& pop, const std::string& name, double q) {
  std::vector<std::pair<double, double>> v;
  double total = 0.0;
  for (const auto& p : pop.particles) {
    v.emplace_back(p.theta.at(name), p.weight);
    total += p.weight;
  }
  if (v.empty() || !(total > 0.0)) throw DomainError("weighted quantile of an empty population");
  std::sort(v.begin(), v.end());
  double cum = 0.0;
  for (const auto& [x, w] : v) {
    cum += w / total;
    if (cum >= q - 1e-12) return x;
  }
  return v.back().first;
}

void cmd_simulate(const RunConfig& cfg) {
  RunDir dir(cfg);
  dir.begin("simulate");
  dir.mark_incomplete({"source.csv"});
  Dataset source = [&] {
    if (!cfg.source.is_builtin()) {
      ColumnSchema schema = cfg.source.schema;
      if (!cfg.source.explicit_covariates) {
        std::ifstream in(cfg.source.csv);
        if (!in) throw ConfigError("source.csv: cannot read " + cfg.source.csv.string());
        std::string header;
        std::getline(in, header);
        if (!header.empty() && header.back() == '\r') header.pop_back();
        try {
          schema = schema_from_header(header, schema.treatment_column, schema.outcome_column);
        } catch (const Error& e) {
          throw ConfigError(std::string("source: ") + e.what());
        }
      }
      try {
        return read_csv(cfg.source.csv, schema);
      } catch (const DataError& e) {
        throw ConfigError(std::string("source.csv: ") + e.what());
      }
    }
    const CatalogEntry& e = catalog_entry(cfg.source.builtin);
    SimulatorConfig sc = e.simulator;
    sc.sample_size = cfg.source.n;
    const Simulator sim(std::move(sc));
    return sim.simulate(cfg.source.theta, RandomStream(cfg.master_seed).substream(kSourceTag, 0)).dataset;
  }();
  atomic_write(dir.path("source.csv"), to_csv_string(source));
  dir.record("source.csv");
  json& c = dir.command("simulate");
  c["rows"] = source.n();
  c["covariates"] = source.covariate_names();
  if (cfg.source.is_builtin()) {
    json theta = json::object();
    for (const auto& [n, v] : cfg.source.theta.entries()) theta[n] = v;
    c["theta"] = theta;
  }
  dir.finish("simulate");
}

TerminationReason cmd_infer(const RunConfig& cfg, const InferOptions& options) {
  RunDir dir(cfg);
  const Dataset source = load_source(dir);
  const auto params = cfg.prior.names();

  std::vector<Population> resumed;
  if (options.resume) {
    const json& prev = dir.command("infer");
    if (prev.is_object() && prev.contains("generations") && !prev.at("generations").empty()) {
      if (!dir.stored_config_matches()) {
        throw ConfigError("config: differs from the run being resumed; start a fresh run without --resume");
      }
      if (prev.value("status", "") == "complete") {
        std::cerr << "inference already complete; nothing to resume\n";
        return *parse_termination_reason(prev.at("termination_reason").get<std::string>());
      }
      resumed = load_final_populations(dir, cfg);
      std::cerr << "resuming after generation " << resumed.back().generation << "\n";
    } else {
      std::cerr << "no sealed generations to resume; starting a fresh run\n";
    }
  }

  const Simulator sim = make_simulator(cfg, source);
  dir.begin("infer");
  dir.command("infer")["resumed_from"] =
      resumed.empty() ? json(nullptr) : json(resumed.back().generation);

  std::vector<Population> sealed = resumed;
  auto persist = [&](const std::vector<Population>& pops) {
    json gens = json::array();
    std::int64_t total = 0;
    for (const auto& p : pops) {
      gens.push_back({{"generation", p.generation},
                      {"epsilon", p.epsilon},
                      {"ess", p.ess},
                      {"simulations", p.simulations},
                      {"sealed", true}});
      total += p.simulations;
    }
    dir.mark_incomplete({"populations.csv"});
    write_populations_csv(pops, params, dir.path("populations.csv.tmp"));
    fs::rename(dir.path("populations.csv.tmp"), dir.path("populations.csv"));
    dir.record("populations.csv");
    dir.command("infer")["generations"] = gens;
    dir.command("infer")["simulation_count"] = total;
    dir.save();
  };
  if (!sealed.empty()) persist(sealed);

  SmcCallbacks callbacks;
  callbacks.on_population = [&](const Population& p) {
    sealed.push_back(p);
    persist(sealed);
    std::cerr << "generation " << p.generation << ": epsilon " << p.epsilon << ", ess " << p.ess
              << ", simulations " << p.simulations << "\n";
    return !(options.stop_after_generation && p.generation >= *options.stop_after_generation);
  };
  const RunResult result = run_smcabc(cfg.prior, sim, source, cfg.smc, resumed, callbacks);
  if (result.populations.size() != sealed.size()) persist(result.populations);

  json& c = dir.command("infer");
  c["termination_reason"] = to_string(result.reason);
  c["simulation_count"] = result.simulation_count;
  dir.finish("infer", result.reason == TerminationReason::interrupted ? "interrupted" : "complete");
  return result.reason;
}

void cmd_generate(const RunConfig& cfg, const std::vector<Regime>& regimes) {
  RunDir dir(cfg);
  const Dataset source = load_source(dir);
  const auto params = cfg.prior.names();
  std::optional<Population> posterior;
  for (Regime r : regimes) {
    if (r != Regime::posterior) continue;
    const auto pops = load_final_populations(dir, cfg);
    const std::string status = dir.command("infer").value("status", "");
    if (status != "complete") {
      throw Error("inference is " + status + "; finish it with `sbice infer --resume` first");
    }
    posterior = pops.back();
  }
  const Simulator sim = make_simulator(cfg, source);
  const Eigen::Index n = dataset_n(cfg, source);
  const int count = cfg.emission.n_datasets;

  dir.begin("generate");
  for (Regime r : regimes) {
    const std::string name = to_string(r);
    const std::string rel = "datasets/" + name + "/";
    fs::remove_all(dir.path(rel));
    fs::create_directories(dir.path(rel));
    dir.drop_artifacts_under(rel);
    std::vector<std::string> planned;
    for (int i = 0; i < count; ++i) planned.push_back(rel + "dataset_" + std::to_string(i) + ".csv");
    planned.push_back(rel + "thetas.csv");
    dir.mark_incomplete(planned);

    const RandomStream stream =
        RandomStream(cfg.master_seed).substream(kEmissionTag, r == Regime::posterior ? 0 : 1);
    const auto emitted = r == Regime::posterior ? emit_posterior(*posterior, sim, count, stream, n)
                                                : emit_prior(cfg.prior, sim, count, stream, n);
    std::ostringstream thetas;
    thetas << "dataset_index";
    for (const auto& p : params) thetas << ',' << p;
    thetas << ",tau_star\n";
    for (int i = 0; i < count; ++i) {
      const auto& g = emitted[static_cast<std::size_t>(i)];
      atomic_write(dir.path(planned[static_cast<std::size_t>(i)]), to_csv_string(g.dataset));
      dir.record(planned[static_cast<std::size_t>(i)]);
      thetas << i;
      for (const auto& p : params) thetas << ',' << format_double(g.theta.at(p));
      const auto tau = g.tau_star ? g.tau_star : g.theta.find("tau");
      thetas << ',' << (tau ? format_double(*tau) : std::string()) << '\n';
    }
    atomic_write(dir.path(rel + "thetas.csv"), thetas.str());
    dir.record(rel + "thetas.csv");
    dir.command("generate")[name] = {{"datasets", count}, {"rows", n}};
    dir.save();
  }
  dir.finish("generate");
}

void cmd_evaluate(const RunConfig& cfg) {
  RunDir dir(cfg);
  const Dataset source = load_source(dir);
  const auto params = cfg.prior.names();

  double source_tau = 0.0;
  if (cfg.evaluation.tau_from_rct) {
    std::ifstream in(cfg.evaluation.rct_csv);
    if (!in) throw ConfigError("evaluation.rct_csv: cannot read " + cfg.evaluation.rct_csv.string());
    std::string header;
    std::getline(in, header);
    if (!header.empty() && header.back() == '\r') header.pop_back();
    const Dataset rct = read_csv(
        cfg.evaluation.rct_csv, schema_from_header(header, cfg.source.schema.treatment_column,
                                                   cfg.source.schema.outcome_column));
    const AteEstimate dm = estimate_ate(rct, EstimatorId::diff_means, cfg.evaluation.learners);
    if (!dm.ok()) throw DataError("evaluation.rct_csv: " + dm.failure);
    source_tau = *dm.value;
  } else if (cfg.evaluation.source_tau_star) {
    source_tau = *cfg.evaluation.source_tau_star;
  } else {
    throw ConfigError("evaluation.source_tau_star: required for a csv source");
  }

  std::map<Regime, EmittedSet> sets;
  for (Regime r : {Regime::posterior, Regime::prior}) {
    auto s = load_emitted(dir, r, params);
    if (!s.datasets.empty()) sets.emplace(r, std::move(s));
  }
  if (sets.empty()) throw Error("no generated datasets found; run `sbice generate` first");

  dir.begin("evaluate");
  dir.mark_incomplete({"metrics.json", "plots_data/bias_long.csv", "plots_data/posterior_samples.csv"});
  const auto& ests = cfg.evaluation.estimators;

  std::vector<AteEstimate> source_est;
  for (EstimatorId id : ests) source_est.push_back(estimate_ate(source, id, cfg.evaluation.learners));

  json metrics;
  json auc = json::object();
  json bse = json::object();
  for (EstimatorId id : ests) bse[to_string(id)] = json::object();
  std::ostringstream bias_csv;
  bias_csv << "regime,estimator,dataset_index,bias\n";

  for (auto& [regime, set] : sets) {
    const std::string rname = to_string(regime);
    std::cerr << "evaluating " << set.datasets.size() << " " << rname << " datasets\n";
    const AucReport a = classifier_auc(set.datasets, source, cfg.evaluation.classifier);
    auc[rname] = {{"mean", a.mean}, {"sd", a.sd}, {"per_dataset", a.per_dataset}};

    std::vector<Dataset> data;
    std::vector<double> taus;
    for (const auto& g : set.datasets) {
      data.push_back(g.dataset);
      if (!g.tau_star) throw DataError("datasets/" + rname + "/thetas.csv: tau_star is empty");
      taus.push_back(*g.tau_star);
    }
    const auto estimates = estimate_all(data, ests, cfg.evaluation.learners);
    for (std::size_t e = 0; e < ests.size(); ++e) {
      json& b = bse[to_string(ests[e])];
      const int failed = static_cast<int>(std::count_if(
          estimates[e].begin(), estimates[e].end(), [](const AteEstimate& x) { return !x.ok(); }));
      if (source_est[e].ok()) {
        const BseResult r = mean_bse(estimates[e], taus, *source_est[e].value, source_tau);
        b[rname] = nullable(r.value);
      } else {
        b[rname] = nullptr;
      }
      b["n_failed"][rname] = failed;
      for (std::size_t i = 0; i < estimates[e].size(); ++i) {
        if (!estimates[e][i].ok()) continue;
        bias_csv << rname << ',' << to_string(ests[e]) << ',' << i << ','
                 << format_double(*estimates[e][i].value - taus[i]) << '\n';
      }
    }
  }

  json src = json::object();
  src["tau_star"] = source_tau;
  src["estimates"] = json::object();
  for (std::size_t e = 0; e < ests.size(); ++e) {
    src["estimates"][to_string(ests[e])] = nullable(source_est[e].value);
    if (!source_est[e].ok()) src["failures"][to_string(ests[e])] = source_est[e].failure;
  }
  metrics["auc"] = auc;
  metrics["bse"] = bse;
  metrics["source"] = src;
  metrics["classifier_columns"] = "all";
  metrics["config"] = json::parse(resolved_config_json(cfg));

  fs::create_directories(dir.path("plots_data"));
  atomic_write(dir.path("metrics.json"), metrics.dump(2) + "\n");
  atomic_write(dir.path("plots_data/bias_long.csv"), bias_csv.str());

  std::ostringstream samples;
  for (const auto& p : params) samples << p << ',';
  samples << "weight\n";
  const fs::path pop_path = dir.path("populations.csv");
  if (fs::exists(pop_path) && dir.command("infer").is_object() &&
      dir.command("infer").value("status", "") == "complete") {
    const auto pops = load_final_populations(dir, cfg);
    for (const auto& particle : pops.back().particles) {
      for (const auto& p : params) samples << format_double(particle.theta.at(p)) << ',';
      samples << format_double(particle.weight) << '\n';
    }
  }
  atomic_write(dir.path("plots_data/posterior_samples.csv"), samples.str());
  for (const char* rel : {"metrics.json", "plots_data/bias_long.csv", "plots_data/posterior_samples.csv"}) {
    dir.record(rel);
  }
  dir.finish("evaluate");
}

void cmd_report(const RunConfig& cfg) {
  RunDir dir(cfg);
  const fs::path mpath = dir.path("metrics.json");
  if (!fs::exists(mpath)) {
    throw Error("metrics.json not found in " + dir.root().string() +
                "; run `sbice evaluate` with the same config first");
  }
  const json metrics = json::parse(read_file(mpath));
  const auto params = cfg.prior.names();

  std::ostringstream md;
  md << "# Run summary\n\n";
  md << "Output directory: `" << dir.root().string() << "`, master seed " << cfg.master_seed << ".\n\n";

  const json& infer = dir.command("infer");
  std::optional<Population> final_pop;
  if (infer.is_object() && infer.contains("generations") && fs::exists(dir.path("populations.csv"))) {
    final_pop = load_final_populations(dir, cfg).back();
    md << "Inference: " << infer.at("generations").size() << " generations, "
       << infer.value("simulation_count", std::int64_t{0}) << " simulations, final epsilon "
       << fixed(final_pop->epsilon, 5) << ", termination `"
       << infer.value("termination_reason", std::string("unknown")) << "`.\n\n";
  }

  md << "## Classifier AUC\n\n| Regime | Mean | SD | Datasets |\n|---|---|---|---|\n";
  for (auto it = metrics.at("auc").begin(); it != metrics.at("auc").end(); ++it) {
    md << "| " << it.key() << " | " << fixed(it.value().at("mean").get<double>()) << " | "
       << fixed(it.value().at("sd").get<double>()) << " | " << it.value().at("per_dataset").size()
       << " |\n";
  }

  md << "\n## Mean BSE\n\nSource tau* = " << fixed(metrics.at("source").at("tau_star").get<double>())
     << ".\n\n| Estimator | Posterior | Prior | Failed (posterior / prior) |\n|---|---|---|---|\n";
  auto cell = [](const json& b, const char* key) -> std::string {
    if (!b.contains(key)) return "n/a";
    return b.at(key).is_null() ? "unavailable" : fixed(b.at(key).get<double>());
  };
  for (auto it = metrics.at("bse").begin(); it != metrics.at("bse").end(); ++it) {
    const auto id = parse_estimator_id(it.key());
    const json& b = it.value();
    const json nf = b.value("n_failed", json::object());
    md << "| " << (id ? display_name(*id) : it.key()) << " | " << cell(b, "posterior") << " | "
       << cell(b, "prior") << " | " << nf.value("posterior", 0) << " / " << nf.value("prior", 0)
       << " |\n";
  }

  if (final_pop) {
    md << "\n## Posterior parameters\n\n| Parameter | Mean | SD | 5% | 95% |\n|---|---|---|---|---|\n";
    for (const auto& p : params) {
      const auto [mean, var] = weighted_moments(*final_pop, p);
      md << "| " << p << " | " << fixed(mean) << " | " << fixed(std::sqrt(var)) << " | "
         << fixed(weighted_quantile(*final_pop, p, 0.05)) << " | "
         << fixed(weighted_quantile(*final_pop, p, 0.95)) << " |\n";
    }
  } else {
    md << "\nNo inference results; posterior parameter summaries omitted.\n";
  }

  dir.begin("report");
  dir.mark_incomplete({"summary.md"});
  atomic_write(dir.path("summary.md"), md.str());
  dir.record("summary.md");
  dir.finish("report");
}

}  // namespace sbice
