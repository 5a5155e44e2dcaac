#include "sbice/smc/smc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "sbice/errors.hpp"
#include "sbice/parallel.hpp"

namespace sbice {
namespace {

constexpr std::uint64_t kGenerationTag = 0x51;
constexpr std::uint64_t kProjectionTag = 0x9e;
constexpr int kMaxProposalTries = 100000;

struct Candidate {
  ThetaVector theta;
  double distance = 0.0;
};

// Everything generation t+1 needs from generation t.
struct Kernel {
  std::vector<std::vector<double>> free;  // per particle, free coordinates
  std::vector<double> weights;
  std::vector<double> cumulative;
  std::vector<double> sd;  // per free coordinate
};

Kernel build_kernel(const PriorSpec& prior, const Population& pop, double scale) {
  Kernel k;
  const std::size_t m = pop.particles.size();
  const std::size_t d = prior.free_dimension();
  k.free.reserve(m);
  for (const auto& p : pop.particles) {
    k.free.push_back(prior.free_values(p.theta));
    k.weights.push_back(p.weight);
  }
  k.cumulative.resize(m);
  std::partial_sum(k.weights.begin(), k.weights.end(), k.cumulative.begin());
  k.sd.assign(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < m; ++i) mean += k.weights[i] * k.free[i][j];
    double var = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double dx = k.free[i][j] - mean;
      var += k.weights[i] * dx * dx;
    }
    const auto& b = prior.free_bound(j);
    const double floor = 1e-12 * (b.high - b.low) * (b.high - b.low);
    k.sd[j] = std::sqrt(scale * std::max(var, floor));
  }
  return k;
}

double log_kernel_mixture(const Kernel& k, const std::vector<double>& x) {
  std::vector<double> terms(k.free.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < k.free.size(); ++i) {
    if (k.weights[i] <= 0.0) {
      terms[i] = -std::numeric_limits<double>::infinity();
      continue;
    }
    double q = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double z = (x[j] - k.free[i][j]) / k.sd[j];
      q += z * z;
    }
    terms[i] = std::log(k.weights[i]) - 0.5 * q;
    top = std::max(top, terms[i]);
  }
  double s = 0.0;
  for (double t : terms) s += std::exp(t - top);
  return top + std::log(s);
}

ThetaVector propose(const PriorSpec& prior, const Kernel& k, Philox4x32& e) {
  for (int attempt = 0; attempt < kMaxProposalTries; ++attempt) {
    const std::size_t parent = weighted_index(k.cumulative, e.uniform());
    std::vector<double> x = k.free[parent];
    for (std::size_t j = 0; j < x.size(); ++j) x[j] += k.sd[j] * e.normal();
    ThetaVector theta = prior.complete(x);
    if (prior.in_support(theta)) return theta;
  }
  throw SimulationError("perturbation kernel keeps leaving the prior support");
}

class GenerationRunner {
 public:
  GenerationRunner(const PriorSpec& prior, const Simulator& simulator, const Dataset& source,
                   const SmcConfig& cfg, int generation, std::optional<Standardizer> standardizer)
      : prior_(prior),
        simulator_(simulator),
        root_(RandomStream(cfg.master_seed).substream(kGenerationTag, std::uint64_t(generation))),
        reference_(source,
                   ProjectionSet::random(source.p() + 2, cfg.distance.n_projections,
                                         RandomStream(cfg.distance.projection_seed)
                                             .substream(kProjectionTag, std::uint64_t(generation))),
                   cfg.distance.order, std::move(standardizer)),
        n_(source.n()) {}

  // Candidates [first, first + count) drawn by `draw`, evaluated in parallel.
  template <class Draw>
  std::vector<Candidate> evaluate(std::int64_t first, std::int64_t count, const Draw& draw) const {
    std::vector<Candidate> out(static_cast<std::size_t>(count));
    parallel_for(out.size(), [&](std::size_t i) {
      const RandomStream s = root_.substream(static_cast<std::uint64_t>(first) + i);
      auto e = s.substream(0).engine();
      Candidate c;
      c.theta = draw(e);
      std::optional<GeneratedDataset> g;
      try {
        g.emplace(simulator_.simulate(c.theta, s.substream(1), n_));
      } catch (const ProtocolError&) {
        throw;
      } catch (const Error& err) {
        throw SimulationError("simulation failed at theta " + c.theta.describe() + ": " +
                              err.what());
      }
      c.distance = reference_.distance(g->dataset);
      if (!std::isfinite(c.distance)) {
        throw SimulationError("non-finite distance at theta " + c.theta.describe());
      }
      out[i] = std::move(c);
    });
    return out;
  }

 private:
  const PriorSpec& prior_;
  const Simulator& simulator_;
  RandomStream root_;
  SlicedWassersteinReference reference_;
  Eigen::Index n_;
};

Population seal(int generation, double epsilon, std::vector<Particle> particles,
                std::int64_t simulations) {
  double total = 0.0;
  for (const auto& p : particles) total += p.weight;
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw SimulationError("generation " + std::to_string(generation) + " has degenerate weights");
  }
  for (auto& p : particles) p.weight /= total;
  Population pop;
  pop.generation = generation;
  pop.epsilon = epsilon;
  pop.particles = std::move(particles);
  pop.ess = effective_sample_size(pop);
  pop.simulations = simulations;
  return pop;
}

}  // namespace

std::string to_string(TerminationReason r) {
  switch (r) {
    case TerminationReason::min_epsilon_reached: return "min_epsilon_reached";
    case TerminationReason::max_generations: return "max_generations";
    case TerminationReason::budget_exhausted: return "budget_exhausted";
    case TerminationReason::interrupted: return "interrupted";
  }
  return "unknown";
}

std::optional<TerminationReason> parse_termination_reason(const std::string& s) {
  for (auto r : {TerminationReason::min_epsilon_reached, TerminationReason::max_generations,
                 TerminationReason::budget_exhausted, TerminationReason::interrupted}) {
    if (to_string(r) == s) return r;
  }
  return std::nullopt;
}

void SmcConfig::validate() const {
  if (population_size < 8) throw ConfigError("smc.population_size must be at least 8");
  if (max_generations < 1) throw ConfigError("smc.max_generations must be at least 1");
  if (!(min_epsilon >= 0.0)) throw ConfigError("smc.min_epsilon must be non-negative");
  if (!(epsilon_quantile > 0.0 && epsilon_quantile < 1.0)) {
    throw ConfigError("smc.epsilon_quantile must lie in (0, 1)");
  }
  if (!(kernel_scale > 0.0)) throw ConfigError("smc.kernel_scale must be positive");
  if (max_simulations_per_generation != 0 && max_simulations_per_generation < population_size) {
    throw ConfigError("smc.max_simulations_per_generation must be at least population_size");
  }
  distance.validate();
}

std::int64_t SmcConfig::budget() const {
  return max_simulations_per_generation > 0 ? max_simulations_per_generation
                                            : std::int64_t{200} * population_size;
}

const Population& RunResult::final_population() const {
  if (populations.empty()) throw SimulationError("the run produced no complete generation");
  return populations.back();
}

double effective_sample_size(std::span<const double> weights) {
  double s = 0.0;
  for (double w : weights) s += w * w;
  // Rounding can push 1/s a hair past the particle count.
  return s > 0.0 ? std::min(1.0 / s, static_cast<double>(weights.size())) : 0.0;
}

double effective_sample_size(const Population& population) {
  std::vector<double> w;
  w.reserve(population.particles.size());
  for (const auto& p : population.particles) w.push_back(p.weight);
  return effective_sample_size(w);
}

double quantile_type7(std::vector<double> values, double q) {
  if (values.empty()) throw DomainError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::pair<double, double> weighted_moments(const Population& population,
                                           const std::string& parameter) {
  double total = 0.0, mean = 0.0;
  for (const auto& p : population.particles) {
    total += p.weight;
    mean += p.weight * p.theta.at(parameter);
  }
  mean /= total;
  double var = 0.0;
  for (const auto& p : population.particles) {
    const double d = p.theta.at(parameter) - mean;
    var += p.weight * d * d;
  }
  return {mean, var / total};
}

std::size_t weighted_index(std::span<const double> cumulative, double u) {
  const double target = u * cumulative.back();
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
  return std::min(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
}

RunResult run_smcabc(const PriorSpec& prior, const Simulator& simulator, const Dataset& source,
                     const SmcConfig& cfg, const std::vector<Population>& resume,
                     const SmcCallbacks& callbacks) {
  cfg.validate();
  if (prior.empty()) throw ConfigError("SMC-ABC needs at least one parameter");
  {
    auto a = prior.names();
    auto b = simulator.parameter_names();
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b) throw ConfigError("prior parameters do not match the simulator's parameters");
  }
  std::optional<Standardizer> standardizer;
  if (cfg.distance.standardize) standardizer = Standardizer::fit(source);

  const auto m = static_cast<std::size_t>(cfg.population_size);
  const std::int64_t budget = cfg.budget();
  RunResult result;
  result.populations = resume;
  for (std::size_t g = 0; g < resume.size(); ++g) {
    if (resume[g].generation != static_cast<int>(g) || resume[g].particles.size() != m) {
      throw ConfigError("resume state does not match this configuration");
    }
    result.simulation_count += resume[g].simulations;
  }

  auto finish = [&](TerminationReason r) {
    result.reason = r;
    return result;
  };
  auto notify = [&](const Population& pop) {
    return !callbacks.on_population || callbacks.on_population(pop);
  };

  if (!resume.empty()) {
    const Population& last = resume.back();
    if (last.epsilon <= cfg.min_epsilon) return finish(TerminationReason::min_epsilon_reached);
    if (static_cast<int>(resume.size()) >= cfg.max_generations) {
      return finish(TerminationReason::max_generations);
    }
  }

  for (int gen = static_cast<int>(result.populations.size()); gen < cfg.max_generations; ++gen) {
    const GenerationRunner runner(prior, simulator, source, cfg, gen, standardizer);
    std::vector<Particle> accepted;
    std::int64_t used = 0;
    double epsilon = 0.0;

    if (gen == 0) {
      auto from_prior = [&](Philox4x32& e) { return prior.sample(e); };
      const auto pilot_n = std::min<std::int64_t>(static_cast<std::int64_t>(2 * m), budget);
      const auto pilot = runner.evaluate(0, pilot_n, from_prior);
      used = pilot_n;
      std::vector<double> d;
      for (const auto& c : pilot) d.push_back(c.distance);
      epsilon = std::max(quantile_type7(d, cfg.epsilon_quantile), cfg.min_epsilon);
      for (const auto& c : pilot) {
        if (accepted.size() < m && c.distance < epsilon) {
          accepted.push_back({c.theta, 1.0, c.distance});
        }
      }
      while (accepted.size() < m) {
        const std::int64_t left = budget - used;
        if (left <= 0) return finish(TerminationReason::budget_exhausted);
        const std::int64_t batch = std::min<std::int64_t>(left, static_cast<std::int64_t>(m));
        const auto more = runner.evaluate(used, batch, from_prior);
        used += batch;
        for (const auto& c : more) {
          if (accepted.size() < m && c.distance < epsilon) {
            accepted.push_back({c.theta, 1.0, c.distance});
          }
        }
      }
    } else {
      const Population& prev = result.populations.back();
      std::vector<double> d;
      for (const auto& p : prev.particles) d.push_back(p.distance);
      epsilon = std::max(quantile_type7(d, cfg.epsilon_quantile), cfg.min_epsilon);
      if (!(epsilon < prev.epsilon)) {
        epsilon = std::nextafter(prev.epsilon, 0.0);
      }
      const Kernel kernel = build_kernel(prior, prev, cfg.kernel_scale);
      auto perturbed = [&](Philox4x32& e) { return propose(prior, kernel, e); };
      double rate = 1.0;
      if (gen >= 2) {
        rate = static_cast<double>(m) / static_cast<double>(std::max<std::int64_t>(prev.simulations, 1));
      }
      while (accepted.size() < m) {
        const std::int64_t left = budget - used;
        if (left <= 0) return finish(TerminationReason::budget_exhausted);
        const double needed = static_cast<double>(m - accepted.size());
        const auto guess = static_cast<std::int64_t>(std::ceil(needed / std::max(rate, 0.02)));
        const std::int64_t batch =
            std::min<std::int64_t>(left, std::clamp<std::int64_t>(guess, 8, 4 * std::int64_t(m)));
        const auto more = runner.evaluate(used, batch, perturbed);
        std::int64_t hits = 0;
        for (const auto& c : more) {
          if (c.distance < epsilon) ++hits;
          if (accepted.size() < m && c.distance < epsilon) {
            accepted.push_back({c.theta, 0.0, c.distance});
          }
        }
        used += batch;
        rate = std::max(static_cast<double>(hits) / static_cast<double>(batch), 0.5 * rate);
      }
      // Weights computed in log space then shifted to avoid overflow.
      std::vector<double> logw;
      for (const auto& p : accepted) {
        logw.push_back(std::log(prior.density(p.theta)) -
                       log_kernel_mixture(kernel, prior.free_values(p.theta)));
      }
      const double top = *std::max_element(logw.begin(), logw.end());
      for (std::size_t i = 0; i < accepted.size(); ++i) {
        accepted[i].weight = std::exp(logw[i] - top);
      }
    }

    result.populations.push_back(seal(gen, epsilon, std::move(accepted), used));
    result.simulation_count += used;
    const Population& sealed = result.populations.back();
    if (!notify(sealed)) return finish(TerminationReason::interrupted);
    if (epsilon <= cfg.min_epsilon) return finish(TerminationReason::min_epsilon_reached);
  }
  return finish(TerminationReason::max_generations);
}

std::vector<GeneratedDataset> emit_posterior(const Population& population,
                                             const Simulator& simulator, int count,
                                             const RandomStream& stream, Eigen::Index n) {
  if (count < 1) throw ConfigError("emission count must be at least 1");
  if (population.particles.empty()) throw SimulationError("cannot emit from an empty population");
  std::vector<double> cumulative;
  double total = 0.0;
  for (const auto& p : population.particles) cumulative.push_back(total += p.weight);
  std::vector<std::optional<GeneratedDataset>> out(static_cast<std::size_t>(count));
  parallel_for(out.size(), [&](std::size_t i) {
    const RandomStream s = stream.substream(i);
    auto e = s.substream(0).engine();
    const auto& theta = population.particles[weighted_index(cumulative, e.uniform())].theta;
    try {
      out[i] = simulator.simulate(theta, s.substream(1), n);
    } catch (const Error& err) {
      throw SimulationError("posterior dataset " + std::to_string(i) + ": " + err.what());
    }
  });
  std::vector<GeneratedDataset> result;
  for (auto& g : out) result.push_back(std::move(*g));
  return result;
}

std::vector<GeneratedDataset> emit_prior(const PriorSpec& prior, const Simulator& simulator,
                                         int count, const RandomStream& stream, Eigen::Index n) {
  if (count < 1) throw ConfigError("emission count must be at least 1");
  std::vector<std::optional<GeneratedDataset>> out(static_cast<std::size_t>(count));
  parallel_for(out.size(), [&](std::size_t i) {
    const RandomStream s = stream.substream(i);
    const ThetaVector theta = prior.sample(s.substream(0));
    try {
      out[i] = simulator.simulate(theta, s.substream(1), n);
    } catch (const Error& err) {
      throw SimulationError("prior dataset " + std::to_string(i) + ": " + err.what());
    }
  });
  std::vector<GeneratedDataset> result;
  for (auto& g : out) result.push_back(std::move(*g));
  return result;
}

void write_populations_csv(const std::vector<Population>& populations,
                           const std::vector<std::string>& parameters,
                           const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "generation,particle_index,weight,distance";
  for (const auto& p : parameters) out << ',' << p;
  out << '\n';
  for (const auto& pop : populations) {
    for (std::size_t i = 0; i < pop.particles.size(); ++i) {
      const auto& p = pop.particles[i];
      out << pop.generation << ',' << i << ',' << format_double(p.weight) << ','
          << format_double(p.distance);
      for (const auto& name : parameters) out << ',' << format_double(p.theta.at(name));
      out << '\n';
    }
  }
  if (!out) throw Error("failed writing " + path.string());
}

std::vector<Population> read_populations_csv(const std::filesystem::path& path,
                                             const std::vector<std::string>& parameters) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  std::string expected = "generation,particle_index,weight,distance";
  for (const auto& p : parameters) expected += "," + p;
  if (line != expected) throw DataError(path.string() + ": unexpected header '" + line + "'");
  std::vector<Population> pops;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream cells(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(cells, cell, ',')) {
      char* end = nullptr;
      const double x = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0') {
        throw DataError(path.string() + ": row " + std::to_string(row) + " is not numeric");
      }
      v.push_back(x);
    }
    if (v.size() != 4 + parameters.size()) {
      throw DataError(path.string() + ": row " + std::to_string(row) + " has the wrong width");
    }
    const int gen = static_cast<int>(v[0]);
    if (gen != static_cast<int>(pops.size()) - 1) {
      if (gen != static_cast<int>(pops.size())) {
        throw DataError(path.string() + ": generations are not contiguous");
      }
      pops.emplace_back();
      pops.back().generation = gen;
    }
    Particle p;
    p.weight = v[2];
    p.distance = v[3];
    for (std::size_t k = 0; k < parameters.size(); ++k) p.theta.set(parameters[k], v[4 + k]);
    pops.back().particles.push_back(std::move(p));
  }
  for (auto& p : pops) p.ess = effective_sample_size(p);
  return pops;
}

}  // namespace sbice
