#include "sbice/run/config.hpp"

#include <algorithm>
#include <exception>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sbice/errors.hpp"
#include "sbice/sim/catalog.hpp"

namespace sbice {
namespace {

using json = nlohmann::ordered_json;

// Seed derivation tags; fixed so runs stay reproducible across versions.
constexpr std::uint64_t kSmcSeedTag = 1;
constexpr std::uint64_t kProjectionSeedTag = 2;
constexpr std::uint64_t kClassifierSeedTag = 3;
constexpr std::uint64_t kLearnerSeedTag = 4;

std::uint64_t derive(std::uint64_t master, std::uint64_t tag) {
  return RandomStream(master).substream(0xc0f1, tag).derived_seed();
}

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ConfigError(path + ": " + msg);
}

// Typed access to one JSON object with unknown-key detection.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }
  ~Obj() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) fail(sub(it.key()), "unknown field");
    }
  }
  Obj(const Obj&) = delete;

  std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  const std::string& path() const { return path_; }
  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }
  const json& raw(const std::string& key) {
    if (!has(key)) fail(sub(key), "missing required field");
    return j_.at(key);
  }
  double num(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_number()) fail(sub(key), "expected a number");
    return v.get<double>();
  }
  double num(const std::string& key, double dflt) { return has(key) ? num(key) : dflt; }
  std::int64_t integer(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_number_integer()) fail(sub(key), "expected an integer");
    return v.get<std::int64_t>();
  }
  std::int64_t integer(const std::string& key, std::int64_t dflt) {
    return has(key) ? integer(key) : dflt;
  }
  std::uint64_t seed(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      fail(sub(key), "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }
  bool boolean(const std::string& key, bool dflt) {
    if (!has(key)) return dflt;
    const auto& v = raw(key);
    if (!v.is_boolean()) fail(sub(key), "expected true or false");
    return v.get<bool>();
  }
  std::string str(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_string()) fail(sub(key), "expected a string");
    return v.get<std::string>();
  }
  std::string str(const std::string& key, const std::string& dflt) {
    return has(key) ? str(key) : dflt;
  }
  std::vector<std::string> strings(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_array()) fail(sub(key), "expected an array of strings");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_string()) fail(sub(key) + "[" + std::to_string(i) + "]", "expected a string");
      out.push_back(v[i].get<std::string>());
    }
    return out;
  }
  std::vector<double> numbers(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_array()) fail(sub(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) fail(sub(key) + "[" + std::to_string(i) + "]", "expected a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

// Runs `f` and prefixes any ConfigError that lacks a path.
template <class F>
void at_path(const std::string& path, F&& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    if (what.rfind(path, 0) == 0) throw;
    throw ConfigError(path + ": " + what);
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

ThetaVector parse_theta(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object of parameter values");
  ThetaVector t;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it.value().is_number()) fail(path + "." + it.key(), "expected a number");
    t.set(it.key(), it.value().get<double>());
  }
  return t;
}

const std::vector<std::pair<DistributionKind, const char*>>& kind_names() {
  static const std::vector<std::pair<DistributionKind, const char*>> k{
      {DistributionKind::normal, "normal"},     {DistributionKind::uniform, "uniform"},
      {DistributionKind::gamma, "gamma"},       {DistributionKind::beta, "beta"},
      {DistributionKind::student_t, "student_t"}, {DistributionKind::bernoulli, "bernoulli"},
      {DistributionKind::exponential, "exponential"}};
  return k;
}

std::size_t kind_arity(DistributionKind k) {
  switch (k) {
    case DistributionKind::student_t: return 3;
    case DistributionKind::bernoulli:
    case DistributionKind::exponential: return 1;
    default: return 2;
  }
}

DistributionSpec parse_margin(const json& j, const std::string& path) {
  Obj o(j, path);
  const std::string kind = o.str("kind");
  DistributionSpec d;
  bool found = false;
  for (const auto& [k, name] : kind_names()) {
    if (kind == name) {
      d.kind = k;
      found = true;
    }
  }
  if (!found) fail(o.sub("kind"), "unknown distribution '" + kind + "'");
  const auto p = o.numbers("params");
  if (p.size() != kind_arity(d.kind)) {
    fail(o.sub("params"), kind + " takes " + std::to_string(kind_arity(d.kind)) + " parameters");
  }
  d.p1 = p[0];
  if (p.size() > 1) d.p2 = p[1];
  if (p.size() > 2) d.p3 = p[2];
  at_path(path, [&] { d.validate(); });
  return d;
}

json margin_json(const DistributionSpec& d) {
  json j;
  for (const auto& [k, name] : kind_names()) {
    if (k == d.kind) j["kind"] = name;
  }
  std::vector<double> p{d.p1, d.p2, d.p3};
  p.resize(kind_arity(d.kind));
  j["params"] = p;
  return j;
}

FrugalConfig parse_frugal(const json& j, const std::string& path) {
  Obj o(j, path);
  FrugalConfig f;
  const auto& covs = o.raw("covariates");
  if (!covs.is_array()) fail(o.sub("covariates"), "expected an array");
  for (std::size_t i = 0; i < covs.size(); ++i) {
    const std::string p = o.sub("covariates") + "[" + std::to_string(i) + "]";
    Obj c(covs[i], p);
    FrugalCovariate fc;
    fc.name = c.str("name");
    fc.margin = parse_margin(c.raw("margin"), c.sub("margin"));
    fc.hidden = c.boolean("hidden", false);
    f.covariates.push_back(std::move(fc));
  }
  f.propensity_intercept = o.num("propensity_intercept", 0.0);
  f.propensity_coefficients = o.numbers("propensity_coefficients");
  if (o.has("propensity_interactions")) {
    const auto& inter = o.raw("propensity_interactions");
    if (!inter.is_array()) fail(o.sub("propensity_interactions"), "expected an array");
    for (std::size_t i = 0; i < inter.size(); ++i) {
      Obj c(inter[i], o.sub("propensity_interactions") + "[" + std::to_string(i) + "]");
      const auto a = c.integer("first"), b = c.integer("second");
      if (a < 0 || b < 0) fail(c.path(), "indices must be non-negative");
      f.propensity_interactions.push_back(
          {static_cast<std::size_t>(a), static_cast<std::size_t>(b), c.num("coefficient")});
    }
  }
  f.margin_intercept = o.num("margin_intercept", 0.0);
  f.margin_sd = o.num("margin_sd", 1.0);
  const auto& corr = o.raw("correlation");
  if (!corr.is_array() || corr.empty()) fail(o.sub("correlation"), "expected a square array of rows");
  const auto dim = static_cast<Eigen::Index>(corr.size());
  Eigen::MatrixXd m(dim, dim);
  for (Eigen::Index r = 0; r < dim; ++r) {
    const auto& row = corr[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != dim) {
      fail(o.sub("correlation") + "[" + std::to_string(r) + "]", "row length differs from the row count");
    }
    for (Eigen::Index c = 0; c < dim; ++c) {
      if (!row[static_cast<std::size_t>(c)].is_number()) {
        fail(o.sub("correlation") + "[" + std::to_string(r) + "][" + std::to_string(c) + "]",
             "expected a number");
      }
      m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
  }
  at_path(o.sub("correlation"), [&] { f.correlation = CorrelationMatrix::spearman(m); });
  f.rho_override = o.boolean("rho_override", false);
  at_path(path, [&] { f.validate(); });
  return f;
}

json frugal_json(const FrugalConfig& f) {
  json j;
  j["covariates"] = json::array();
  for (const auto& c : f.covariates) {
    j["covariates"].push_back({{"name", c.name}, {"margin", margin_json(c.margin)}, {"hidden", c.hidden}});
  }
  j["propensity_intercept"] = f.propensity_intercept;
  j["propensity_coefficients"] = f.propensity_coefficients;
  j["propensity_interactions"] = json::array();
  for (const auto& i : f.propensity_interactions) {
    j["propensity_interactions"].push_back(
        {{"first", i.first}, {"second", i.second}, {"coefficient", i.coefficient}});
  }
  j["margin_intercept"] = f.margin_intercept;
  j["margin_sd"] = f.margin_sd;
  const auto& m = f.correlation.spearman_entries();
  j["correlation"] = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row;
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    j["correlation"].push_back(row);
  }
  j["rho_override"] = f.rho_override;
  return j;
}

ExternalConfig parse_external(const json& j, const std::string& path, const std::filesystem::path& base) {
  Obj o(j, path);
  ExternalConfig e;
  e.command = o.strings("command");
  if (e.command.empty()) fail(o.sub("command"), "must not be empty");
  e.working_dir = resolve(base, o.str("working_dir", "."));
  e.timeout_seconds = o.num("timeout_seconds", 60.0);
  if (!(e.timeout_seconds > 0.0)) fail(o.sub("timeout_seconds"), "must be positive");
  const std::string mode = o.str("mode", "persistent");
  if (mode == "persistent") {
    e.mode = WorkerMode::persistent;
  } else if (mode == "oneshot") {
    e.mode = WorkerMode::oneshot;
  } else {
    fail(o.sub("mode"), "expected 'persistent' or 'oneshot'");
  }
  e.parameters = o.strings("parameters");
  e.treatment_column = o.str("treatment_column", "t");
  e.outcome_column = o.str("outcome_column", "y");
  return e;
}

PriorSpec parse_prior(const json& j, const std::string& path) {
  Obj o(j, path);
  const auto& params = o.raw("parameters");
  if (!params.is_array()) fail(o.sub("parameters"), "expected an array");
  std::vector<ParameterBound> bounds;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Obj b(params[i], o.sub("parameters") + "[" + std::to_string(i) + "]");
    bounds.push_back({b.str("name"), b.num("low"), b.num("high")});
  }
  std::optional<LinearConstraint> constraint;
  if (o.has("constraint")) {
    Obj c(o.raw("constraint"), o.sub("constraint"));
    LinearConstraint lc;
    const auto& coef = c.raw("coefficients");
    if (!coef.is_object()) fail(c.sub("coefficients"), "expected an object of coefficients");
    for (auto it = coef.begin(); it != coef.end(); ++it) {
      if (!it.value().is_number()) fail(c.sub("coefficients") + "." + it.key(), "expected a number");
      lc.coefficients.emplace_back(it.key(), it.value().get<double>());
    }
    lc.constant = c.num("constant");
    constraint = lc;
  }
  PriorSpec prior;
  at_path(path, [&] { prior = PriorSpec(bounds, constraint); });
  return prior;
}

json prior_json(const PriorSpec& p) {
  json j;
  j["parameters"] = json::array();
  for (const auto& b : p.bounds()) {
    j["parameters"].push_back({{"name", b.name}, {"low", b.low}, {"high", b.high}});
  }
  if (p.constraint()) {
    json c;
    c["coefficients"] = json::object();
    for (const auto& [n, a] : p.constraint()->coefficients) c["coefficients"][n] = a;
    c["constant"] = p.constraint()->constant;
    j["constraint"] = c;
  }
  return j;
}

json theta_json(const ThetaVector& t) {
  json j = json::object();
  for (const auto& [n, v] : t.entries()) j[n] = v;
  return j;
}

}  // namespace

void RunConfig::validate() const {
  if (source.is_builtin()) {
    if (source.n < 2) fail("source.n", "must be at least 2");
  } else if (source.csv.empty()) {
    fail("source", "needs either 'builtin' or 'csv'");
  }
  at_path("simulator", [&] { simulator.validate(); });
  if (prior.empty() && !simulator.parameter_names().empty()) {
    fail("prior", "missing; the simulator has parameters");
  }
  {
    auto a = prior.names();
    auto b = simulator.parameter_names();
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b) fail("prior.parameters", "names must match the simulator's parameters");
  }
  smc.validate();
  if (emission.n_datasets < 1) fail("emission.n_datasets", "must be at least 1");
  if (emission.dataset_n && *emission.dataset_n < 2) fail("emission.dataset_n", "must be at least 2");
  at_path("evaluation.classifier", [&] { evaluation.classifier.validate(); });
  at_path("evaluation.learners", [&] { evaluation.learners.validate(); });
  if (evaluation.estimators.empty()) fail("evaluation.estimators", "must not be empty");
  if (output_dir.empty()) fail("output_dir", "missing required field");
}

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig cfg;
  {
    Obj o(root, "");
    cfg.master_seed = o.seed("master_seed");
    cfg.output_dir = resolve(base_dir, o.str("output_dir"));

    // source
    {
      Obj s(o.raw("source"), "source");
      if (s.has("builtin") == s.has("csv")) fail("source", "give exactly one of 'builtin' or 'csv'");
      if (s.has("builtin")) {
        cfg.source.builtin = s.str("builtin");
        const CatalogEntry* e = nullptr;
        at_path("source.builtin", [&] { e = &catalog_entry(cfg.source.builtin); });
        cfg.source.theta = s.has("theta") ? parse_theta(s.raw("theta"), "source.theta") : e->reference;
        at_path("source.theta", [&] { cfg.source.theta.require_names(e->simulator.parameter_names()); });
        cfg.source.n = s.integer("n", e->simulator.sample_size);
      } else {
        cfg.source.csv = resolve(base_dir, s.str("csv"));
        cfg.source.schema.treatment_column = s.str("treatment_column", "t");
        cfg.source.schema.outcome_column = s.str("outcome_column", "y");
        if (s.has("covariate_columns")) {
          cfg.source.schema.covariate_columns = s.strings("covariate_columns");
          cfg.source.explicit_covariates = true;
          at_path("source", [&] { cfg.source.schema.validate(); });
        }
      }
    }

    // simulator
    std::optional<PriorSpec> catalog_prior;
    {
      Obj s(o.raw("simulator"), "simulator");
      const int kinds = int(s.has("builtin")) + int(s.has("frugal")) + int(s.has("external"));
      if (kinds != 1) fail("simulator", "give exactly one of 'builtin', 'frugal' or 'external'");
      if (s.has("builtin")) {
        cfg.simulator_id = s.str("builtin");
        const CatalogEntry* e = nullptr;
        at_path("simulator.builtin", [&] { e = &catalog_entry(cfg.simulator_id); });
        cfg.simulator = e->simulator;
        if (!e->prior.empty()) catalog_prior = e->prior;
      } else if (s.has("frugal")) {
        cfg.simulator.variant = parse_frugal(s.raw("frugal"), "simulator.frugal");
      } else {
        cfg.simulator.variant = parse_external(s.raw("external"), "simulator.external", base_dir);
      }
      cfg.simulator.sample_size = s.integer(
          "sample_size", cfg.source.is_builtin() ? cfg.source.n : cfg.simulator.sample_size);
      if (s.has("sample_size") && cfg.simulator.sample_size < 2) {
        fail("simulator.sample_size", "must be at least 2");
      }
    }

    if (o.has("prior")) {
      cfg.prior = parse_prior(o.raw("prior"), "prior");
    } else if (catalog_prior) {
      cfg.prior = *catalog_prior;
    }

    // smc
    cfg.smc.master_seed = derive(cfg.master_seed, kSmcSeedTag);
    cfg.smc.distance.projection_seed = derive(cfg.master_seed, kProjectionSeedTag);
    if (o.has("smc")) {
      Obj s(o.raw("smc"), "smc");
      cfg.smc.population_size = static_cast<int>(s.integer("population_size", cfg.smc.population_size));
      cfg.smc.max_generations = static_cast<int>(s.integer("max_generations", cfg.smc.max_generations));
      cfg.smc.min_epsilon = s.num("min_epsilon", cfg.smc.min_epsilon);
      cfg.smc.epsilon_quantile = s.num("epsilon_quantile", cfg.smc.epsilon_quantile);
      cfg.smc.kernel_scale = s.num("kernel_scale", cfg.smc.kernel_scale);
      cfg.smc.max_simulations_per_generation =
          s.integer("max_simulations_per_generation", cfg.smc.max_simulations_per_generation);
      if (s.has("seed")) cfg.smc.master_seed = s.seed("seed");
      if (s.has("distance")) {
        Obj d(s.raw("distance"), "smc.distance");
        cfg.smc.distance.n_projections = static_cast<int>(d.integer("n_projections", cfg.smc.distance.n_projections));
        cfg.smc.distance.order = static_cast<int>(d.integer("order", cfg.smc.distance.order));
        cfg.smc.distance.standardize = d.boolean("standardize", cfg.smc.distance.standardize);
        if (d.has("projection_seed")) cfg.smc.distance.projection_seed = d.seed("projection_seed");
      }
    }

    if (o.has("emission")) {
      Obj e(o.raw("emission"), "emission");
      cfg.emission.n_datasets = static_cast<int>(e.integer("n_datasets", cfg.emission.n_datasets));
      if (e.has("dataset_n")) cfg.emission.dataset_n = e.integer("dataset_n");
    }

    cfg.evaluation.classifier.seed = derive(cfg.master_seed, kClassifierSeedTag);
    cfg.evaluation.learners.seed = derive(cfg.master_seed, kLearnerSeedTag);
    if (o.has("evaluation")) {
      Obj e(o.raw("evaluation"), "evaluation");
      if (e.has("estimators")) {
        cfg.evaluation.estimators.clear();
        const auto ids = e.strings("estimators");
        for (std::size_t i = 0; i < ids.size(); ++i) {
          const auto id = parse_estimator_id(ids[i]);
          if (!id) fail("evaluation.estimators[" + std::to_string(i) + "]", "unknown estimator '" + ids[i] + "'");
          cfg.evaluation.estimators.push_back(*id);
        }
      }
      if (e.has("classifier")) {
        Obj c(e.raw("classifier"), "evaluation.classifier");
        auto& k = cfg.evaluation.classifier;
        k.n_trees = static_cast<int>(c.integer("n_trees", k.n_trees));
        k.max_depth = static_cast<int>(c.integer("max_depth", k.max_depth));
        k.features_per_split = static_cast<int>(c.integer("features_per_split", k.features_per_split));
        k.folds = static_cast<int>(c.integer("folds", k.folds));
        if (c.has("seed")) k.seed = c.seed("seed");
      }
      if (e.has("learners")) {
        Obj l(e.raw("learners"), "evaluation.learners");
        auto& k = cfg.evaluation.learners;
        if (l.has("gbt")) {
          Obj g(l.raw("gbt"), "evaluation.learners.gbt");
          k.gbt.n_trees = static_cast<int>(g.integer("n_trees", k.gbt.n_trees));
          k.gbt.max_depth = static_cast<int>(g.integer("max_depth", k.gbt.max_depth));
          k.gbt.learning_rate = g.num("learning_rate", k.gbt.learning_rate);
          k.gbt.min_leaf = static_cast<int>(g.integer("min_leaf", k.gbt.min_leaf));
        }
        k.cross_fit_folds = static_cast<int>(l.integer("cross_fit_folds", k.cross_fit_folds));
        if (l.has("propensity_clip")) {
          const auto clip = l.numbers("propensity_clip");
          if (clip.size() != 2) fail("evaluation.learners.propensity_clip", "expected [low, high]");
          k.propensity_clip_low = clip[0];
          k.propensity_clip_high = clip[1];
        }
        k.clip_propensity = l.boolean("clip_propensity", k.clip_propensity);
        if (l.has("seed")) k.seed = l.seed("seed");
      }
      if (e.has("source_tau_star")) {
        const auto& v = e.raw("source_tau_star");
        if (v.is_number()) {
          cfg.evaluation.source_tau_star = v.get<double>();
        } else if (v.is_string() && v.get<std::string>() == "diff_means_of_rct") {
          cfg.evaluation.tau_from_rct = true;
        } else {
          fail("evaluation.source_tau_star", "expected a number or \"diff_means_of_rct\"");
        }
      }
      if (e.has("rct_csv")) cfg.evaluation.rct_csv = resolve(base_dir, e.str("rct_csv"));
      if (cfg.evaluation.tau_from_rct && cfg.evaluation.rct_csv.empty()) {
        fail("evaluation.rct_csv", "required when source_tau_star is \"diff_means_of_rct\"");
      }
    }
    if (!cfg.evaluation.source_tau_star && !cfg.evaluation.tau_from_rct && cfg.source.is_builtin()) {
      cfg.evaluation.source_tau_star = cfg.source.theta.find("tau");
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.parent_path().empty() ? "." : path.parent_path());
}

std::string resolved_config_json(const RunConfig& cfg) {
  json j;
  j["master_seed"] = cfg.master_seed;
  j["output_dir"] = cfg.output_dir.string();
  json src;
  if (cfg.source.is_builtin()) {
    src["builtin"] = cfg.source.builtin;
    src["theta"] = theta_json(cfg.source.theta);
    src["n"] = cfg.source.n;
  } else {
    src["csv"] = cfg.source.csv.string();
    src["treatment_column"] = cfg.source.schema.treatment_column;
    src["outcome_column"] = cfg.source.schema.outcome_column;
    if (cfg.source.explicit_covariates) src["covariate_columns"] = cfg.source.schema.covariate_columns;
  }
  j["source"] = src;

  json sim;
  if (!cfg.simulator_id.empty()) {
    sim["builtin"] = cfg.simulator_id;
  } else if (const auto* f = std::get_if<FrugalConfig>(&cfg.simulator.variant)) {
    sim["frugal"] = frugal_json(*f);
  } else if (const auto* e = std::get_if<ExternalConfig>(&cfg.simulator.variant)) {
    sim["external"] = {{"command", e->command},
                       {"working_dir", e->working_dir.string()},
                       {"timeout_seconds", e->timeout_seconds},
                       {"mode", e->mode == WorkerMode::persistent ? "persistent" : "oneshot"},
                       {"parameters", e->parameters},
                       {"treatment_column", e->treatment_column},
                       {"outcome_column", e->outcome_column}};
  }
  sim["sample_size"] = cfg.simulator.sample_size;
  j["simulator"] = sim;
  if (!cfg.prior.empty()) j["prior"] = prior_json(cfg.prior);

  j["smc"] = {{"population_size", cfg.smc.population_size},
              {"max_generations", cfg.smc.max_generations},
              {"min_epsilon", cfg.smc.min_epsilon},
              {"epsilon_quantile", cfg.smc.epsilon_quantile},
              {"kernel_scale", cfg.smc.kernel_scale},
              {"max_simulations_per_generation", cfg.smc.budget()},
              {"seed", cfg.smc.master_seed},
              {"distance",
               {{"n_projections", cfg.smc.distance.n_projections},
                {"order", cfg.smc.distance.order},
                {"standardize", cfg.smc.distance.standardize},
                {"projection_seed", cfg.smc.distance.projection_seed}}}};
  json em;
  em["n_datasets"] = cfg.emission.n_datasets;
  if (cfg.emission.dataset_n) em["dataset_n"] = *cfg.emission.dataset_n;
  j["emission"] = em;

  json ev;
  ev["estimators"] = json::array();
  for (auto id : cfg.evaluation.estimators) ev["estimators"].push_back(to_string(id));
  const auto& c = cfg.evaluation.classifier;
  ev["classifier"] = {{"n_trees", c.n_trees},
                      {"max_depth", c.max_depth},
                      {"features_per_split", c.features_per_split},
                      {"folds", c.folds},
                      {"seed", c.seed}};
  const auto& l = cfg.evaluation.learners;
  ev["learners"] = {{"gbt",
                     {{"n_trees", l.gbt.n_trees},
                      {"max_depth", l.gbt.max_depth},
                      {"learning_rate", l.gbt.learning_rate},
                      {"min_leaf", l.gbt.min_leaf}}},
                    {"cross_fit_folds", l.cross_fit_folds},
                    {"propensity_clip", {l.propensity_clip_low, l.propensity_clip_high}},
                    {"clip_propensity", l.clip_propensity},
                    {"seed", l.seed}};
  if (cfg.evaluation.tau_from_rct) {
    ev["source_tau_star"] = "diff_means_of_rct";
    ev["rct_csv"] = cfg.evaluation.rct_csv.string();
  } else if (cfg.evaluation.source_tau_star) {
    ev["source_tau_star"] = *cfg.evaluation.source_tau_star;
  }
  j["evaluation"] = ev;
  return j.dump(2) + "\n";
}

}  // namespace sbice
