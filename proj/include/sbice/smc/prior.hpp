#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sbice/sim/theta.hpp"
#include "sbice/stat/random.hpp"

namespace sbice {

struct ParameterBound {
  std::string name;
  double low = 0.0;
  double high = 1.0;
};

/// sum_i coefficient_i * theta_i == constant.
struct LinearConstraint {
  std::vector<std::pair<std::string, double>> coefficients;
  double constant = 0.0;
};

/// Independent uniform bounds per parameter with an optional linear equality.
///
/// Under a constraint, the last parameter (in declaration order) carrying a
/// nonzero coefficient is the dependent one: it is solved from the others,
/// which form the free coordinates. Densities are taken with respect to
/// Lebesgue measure on the free coordinates.
class PriorSpec {
 public:
  PriorSpec() = default;
  explicit PriorSpec(std::vector<ParameterBound> bounds,
                     std::optional<LinearConstraint> constraint = std::nullopt);

  const std::vector<ParameterBound>& bounds() const { return bounds_; }
  const std::optional<LinearConstraint>& constraint() const { return constraint_; }
  std::vector<std::string> names() const;
  std::size_t dimension() const { return bounds_.size(); }
  bool empty() const { return bounds_.empty(); }

  std::size_t free_dimension() const { return free_.size(); }
  const std::vector<std::size_t>& free_indices() const { return free_; }
  const ParameterBound& free_bound(std::size_t k) const { return bounds_[free_[k]]; }

  /// Theta built from free coordinates; the dependent one is solved, not
  /// bounds-checked.
  ThetaVector complete(std::span<const double> free_values) const;
  std::vector<double> free_values(const ThetaVector& theta) const;

  /// Inside every bound and, when constrained, residual <= 1e-12 (relative).
  bool in_support(const ThetaVector& theta) const;
  double density(const ThetaVector& theta) const;
  double constraint_residual(const ThetaVector& theta) const;

  ThetaVector sample(Philox4x32& engine) const;
  ThetaVector sample(const RandomStream& stream) const;

 private:
  std::vector<ParameterBound> bounds_;
  std::optional<LinearConstraint> constraint_;
  std::vector<double> coefficient_;  // per bound, 0 when absent
  std::vector<std::size_t> free_;
  std::size_t dependent_ = 0;
  double free_volume_ = 1.0;
};

}  // namespace sbice
