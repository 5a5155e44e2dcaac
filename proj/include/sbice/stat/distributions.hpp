#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sbice/stat/random.hpp"

namespace sbice {

enum class DistributionKind {
  normal,
  uniform,
  gamma,
  beta,
  student_t,
  bernoulli,
  exponential,
};

/// A univariate marginal law. Parameter meaning depends on the kind:
///
///   normal       (mean, sd)
///   uniform      (lo, hi); lo == hi is a point mass
///   gamma        (mean, dispersion): shape 1/dispersion, scale mean*dispersion
///   beta         (a, b)
///   student_t    (loc, scale, df)
///   bernoulli    (p)
///   exponential  (rate)
struct DistributionSpec {
  DistributionKind kind = DistributionKind::normal;
  double p1 = 0.0;
  double p2 = 1.0;
  double p3 = 0.0;

  static DistributionSpec normal(double mean, double sd);
  static DistributionSpec uniform(double lo, double hi);
  static DistributionSpec gamma(double mean, double dispersion);
  static DistributionSpec beta(double a, double b);
  static DistributionSpec student_t(double loc, double scale, double df);
  static DistributionSpec bernoulli(double p);
  static DistributionSpec exponential(double rate);

  /// Throws ConfigError when the parameters violate the kind's constraints.
  void validate() const;
  bool is_discrete() const { return kind == DistributionKind::bernoulli; }
  std::string describe() const;

  friend bool operator==(const DistributionSpec&,
                         const DistributionSpec&) = default;
};

/// One draw from an already-running generator.
double sample(const DistributionSpec& spec, Philox4x32& engine);

/// count i.i.d. draws from the start of stream.
std::vector<double> draw(const DistributionSpec& spec,
                         const RandomStream& stream, std::size_t count);

double cdf(const DistributionSpec& spec, double x);

/// Inverse CDF. u must lie in (0, 1); DomainError otherwise.
double quantile(const DistributionSpec& spec, double u);

/// Value of the margin at standard-normal score s, i.e. quantile(Phi(s)),
/// evaluated through the upper tail for s > 0 so large scores keep precision.
/// Bernoulli margins return 1 iff s > Phi^{-1}(1 - p).
double value_at_score(const DistributionSpec& spec, double s);

double normal_cdf(double z);
double normal_quantile(double u);
double expit(double x);
double logit(double p);

}  // namespace sbice
