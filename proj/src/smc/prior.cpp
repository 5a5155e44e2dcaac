#include "sbice/smc/prior.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "sbice/errors.hpp"

namespace sbice {

PriorSpec::PriorSpec(std::vector<ParameterBound> bounds,
                     std::optional<LinearConstraint> constraint)
    : bounds_(std::move(bounds)), constraint_(std::move(constraint)) {
  std::unordered_set<std::string> seen;
  for (const auto& b : bounds_) {
    if (b.name.empty() || !seen.insert(b.name).second) {
      throw ConfigError("prior parameter names must be unique and non-empty ('" +
                        b.name + "')");
    }
    if (!std::isfinite(b.low) || !std::isfinite(b.high) || !(b.low < b.high)) {
      throw ConfigError("prior bounds for '" + b.name + "' need low < high");
    }
  }
  coefficient_.assign(bounds_.size(), 0.0);
  if (!constraint_) {
    for (std::size_t i = 0; i < bounds_.size(); ++i) free_.push_back(i);
    for (const auto& b : bounds_) free_volume_ *= b.high - b.low;
    return;
  }
  for (const auto& [name, a] : constraint_->coefficients) {
    auto it = std::find_if(bounds_.begin(), bounds_.end(),
                           [&](const ParameterBound& b) { return b.name == name; });
    if (it == bounds_.end()) {
      throw ConfigError("constraint names unknown parameter '" + name + "'");
    }
    if (!std::isfinite(a)) throw ConfigError("constraint coefficient is not finite");
    coefficient_[static_cast<std::size_t>(it - bounds_.begin())] = a;
  }
  if (!std::isfinite(constraint_->constant)) {
    throw ConfigError("constraint constant is not finite");
  }
  std::optional<std::size_t> dep;
  for (std::size_t i = 0; i < bounds_.size(); ++i) {
    if (coefficient_[i] != 0.0) dep = i;
  }
  if (!dep) throw ConfigError("constraint needs at least one nonzero coefficient");
  dependent_ = *dep;
  for (std::size_t i = 0; i < bounds_.size(); ++i) {
    if (i != dependent_) {
      free_.push_back(i);
      free_volume_ *= bounds_[i].high - bounds_[i].low;
    }
  }
  // Interval arithmetic for the reachable range of the dependent parameter.
  double s_lo = 0.0, s_hi = 0.0;
  for (std::size_t i : free_) {
    const double a = coefficient_[i];
    s_lo += std::min(a * bounds_[i].low, a * bounds_[i].high);
    s_hi += std::max(a * bounds_[i].low, a * bounds_[i].high);
  }
  const double a_dep = coefficient_[dependent_];
  const double r1 = (constraint_->constant - s_lo) / a_dep;
  const double r2 = (constraint_->constant - s_hi) / a_dep;
  const double reach_lo = std::min(r1, r2), reach_hi = std::max(r1, r2);
  const auto& db = bounds_[dependent_];
  if (reach_hi < db.low || reach_lo > db.high) {
    throw ConfigError("linear constraint has an empty feasible slice within the prior box");
  }
}

std::vector<std::string> PriorSpec::names() const {
  std::vector<std::string> out;
  for (const auto& b : bounds_) out.push_back(b.name);
  return out;
}

ThetaVector PriorSpec::complete(std::span<const double> free_values) const {
  if (free_values.size() != free_.size()) {
    throw ConfigError("wrong number of free prior coordinates");
  }
  std::vector<double> values(bounds_.size(), 0.0);
  for (std::size_t k = 0; k < free_.size(); ++k) values[free_[k]] = free_values[k];
  if (constraint_) {
    double s = 0.0;
    for (std::size_t i : free_) s += coefficient_[i] * values[i];
    values[dependent_] = (constraint_->constant - s) / coefficient_[dependent_];
  }
  ThetaVector theta;
  for (std::size_t i = 0; i < bounds_.size(); ++i) theta.set(bounds_[i].name, values[i]);
  return theta;
}

std::vector<double> PriorSpec::free_values(const ThetaVector& theta) const {
  std::vector<double> out;
  out.reserve(free_.size());
  for (std::size_t i : free_) out.push_back(theta.at(bounds_[i].name));
  return out;
}

double PriorSpec::constraint_residual(const ThetaVector& theta) const {
  if (!constraint_) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < bounds_.size(); ++i) {
    if (coefficient_[i] != 0.0) s += coefficient_[i] * theta.at(bounds_[i].name);
  }
  return std::abs(s - constraint_->constant);
}

bool PriorSpec::in_support(const ThetaVector& theta) const {
  for (const auto& b : bounds_) {
    const auto v = theta.find(b.name);
    if (!v || !(*v >= b.low && *v <= b.high)) return false;
  }
  if (constraint_) {
    const double scale = std::max(1.0, std::abs(constraint_->constant));
    if (constraint_residual(theta) > 1e-12 * scale) return false;
  }
  return true;
}

double PriorSpec::density(const ThetaVector& theta) const {
  return in_support(theta) ? 1.0 / free_volume_ : 0.0;
}

ThetaVector PriorSpec::sample(Philox4x32& engine) const {
  std::vector<double> free_values(free_.size());
  for (int attempt = 0; attempt < 1'000'000; ++attempt) {
    for (std::size_t k = 0; k < free_.size(); ++k) {
      const auto& b = bounds_[free_[k]];
      free_values[k] = b.low + (b.high - b.low) * engine.uniform();
    }
    ThetaVector theta = complete(free_values);
    if (!constraint_) return theta;
    const double dep = theta.at(bounds_[dependent_].name);
    if (dep >= bounds_[dependent_].low && dep <= bounds_[dependent_].high) return theta;
  }
  throw SimulationError("prior sampling: constraint slice too thin to hit by rejection");
}

ThetaVector PriorSpec::sample(const RandomStream& stream) const {
  auto engine = stream.engine();
  return sample(engine);
}

}  // namespace sbice
