#include "sbice/stat/distributions.hpp"

#include <cmath>
#include <sstream>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/erf.hpp>

#include "sbice/errors.hpp"

namespace sbice {
namespace {

namespace bm = boost::math;

double sample_gamma_shape(double shape, Philox4x32& engine) {
  // Marsaglia & Tsang (2000); shapes below one use the u^(1/shape) boost.
  if (shape < 1.0) {
    const double g = sample_gamma_shape(shape + 1.0, engine);
    return g * std::pow(engine.uniform(), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double z, v;
    do {
      z = engine.normal();
      v = 1.0 + c * z;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = engine.uniform();
    if (u < 1.0 - 0.0331 * z * z * z * z) return d * v;
    if (std::log(u) < 0.5 * z * z + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double gamma_shape(const DistributionSpec& s) { return 1.0 / s.p2; }
double gamma_scale(const DistributionSpec& s) { return s.p1 * s.p2; }

}  // namespace

DistributionSpec DistributionSpec::normal(double mean, double sd) {
  return {DistributionKind::normal, mean, sd, 0.0};
}
DistributionSpec DistributionSpec::uniform(double lo, double hi) {
  return {DistributionKind::uniform, lo, hi, 0.0};
}
DistributionSpec DistributionSpec::gamma(double mean, double dispersion) {
  return {DistributionKind::gamma, mean, dispersion, 0.0};
}
DistributionSpec DistributionSpec::beta(double a, double b) {
  return {DistributionKind::beta, a, b, 0.0};
}
DistributionSpec DistributionSpec::student_t(double loc, double scale,
                                             double df) {
  return {DistributionKind::student_t, loc, scale, df};
}
DistributionSpec DistributionSpec::bernoulli(double p) {
  return {DistributionKind::bernoulli, p, 0.0, 0.0};
}
DistributionSpec DistributionSpec::exponential(double rate) {
  return {DistributionKind::exponential, rate, 0.0, 0.0};
}

void DistributionSpec::validate() const {
  auto require = [this](bool ok, const char* what) {
    if (!ok) throw ConfigError(describe() + ": " + what);
  };
  require(std::isfinite(p1) && std::isfinite(p2) && std::isfinite(p3),
          "parameters must be finite");
  switch (kind) {
    case DistributionKind::normal:
      require(p2 > 0.0, "sd must be positive");
      break;
    case DistributionKind::uniform:
      require(p2 >= p1, "hi must not be below lo");
      break;
    case DistributionKind::gamma:
      require(p1 > 0.0 && p2 > 0.0, "mean and dispersion must be positive");
      break;
    case DistributionKind::beta:
      require(p1 > 0.0 && p2 > 0.0, "shape parameters must be positive");
      break;
    case DistributionKind::student_t:
      require(p2 > 0.0 && p3 > 0.0, "scale and df must be positive");
      break;
    case DistributionKind::bernoulli:
      require(p1 >= 0.0 && p1 <= 1.0, "p must lie in [0, 1]");
      break;
    case DistributionKind::exponential:
      require(p1 > 0.0, "rate must be positive");
      break;
  }
}

std::string DistributionSpec::describe() const {
  std::ostringstream out;
  switch (kind) {
    case DistributionKind::normal:
      out << "Normal(" << p1 << ", " << p2 << ")";
      break;
    case DistributionKind::uniform:
      out << "Uniform(" << p1 << ", " << p2 << ")";
      break;
    case DistributionKind::gamma:
      out << "Gamma(mean=" << p1 << ", dispersion=" << p2 << ")";
      break;
    case DistributionKind::beta:
      out << "Beta(" << p1 << ", " << p2 << ")";
      break;
    case DistributionKind::student_t:
      out << "StudentT(" << p1 << ", " << p2 << ", df=" << p3 << ")";
      break;
    case DistributionKind::bernoulli:
      out << "Bernoulli(" << p1 << ")";
      break;
    case DistributionKind::exponential:
      out << "Exponential(rate=" << p1 << ")";
      break;
  }
  return out.str();
}

double sample(const DistributionSpec& s, Philox4x32& engine) {
  switch (s.kind) {
    case DistributionKind::normal:
      return s.p1 + s.p2 * engine.normal();
    case DistributionKind::uniform:
      return s.p1 + (s.p2 - s.p1) * engine.uniform();
    case DistributionKind::gamma:
      return gamma_scale(s) * sample_gamma_shape(gamma_shape(s), engine);
    case DistributionKind::beta: {
      const double x = sample_gamma_shape(s.p1, engine);
      const double y = sample_gamma_shape(s.p2, engine);
      return x / (x + y);
    }
    case DistributionKind::student_t: {
      const double z = engine.normal();
      const double chi2 = 2.0 * sample_gamma_shape(0.5 * s.p3, engine);
      return s.p1 + s.p2 * z / std::sqrt(chi2 / s.p3);
    }
    case DistributionKind::bernoulli:
      return engine.uniform() < s.p1 ? 1.0 : 0.0;
    case DistributionKind::exponential:
      return -std::log(engine.uniform()) / s.p1;
  }
  return 0.0;
}

std::vector<double> draw(const DistributionSpec& spec,
                         const RandomStream& stream, std::size_t count) {
  spec.validate();
  auto engine = stream.engine();
  std::vector<double> out(count);
  for (auto& x : out) x = sample(spec, engine);
  return out;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) {
    throw DomainError("normal_quantile: u must lie in (0, 1)");
  }
  return -std::sqrt(2.0) * bm::erfc_inv(2.0 * u);
}

double expit(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

double cdf(const DistributionSpec& s, double x) {
  s.validate();
  switch (s.kind) {
    case DistributionKind::normal:
      return normal_cdf((x - s.p1) / s.p2);
    case DistributionKind::uniform:
      if (x < s.p1) return 0.0;
      if (x >= s.p2) return 1.0;
      return (x - s.p1) / (s.p2 - s.p1);
    case DistributionKind::gamma:
      if (x <= 0.0) return 0.0;
      return bm::gamma_p(gamma_shape(s), x / gamma_scale(s));
    case DistributionKind::beta:
      if (x <= 0.0) return 0.0;
      if (x >= 1.0) return 1.0;
      return bm::ibeta(s.p1, s.p2, x);
    case DistributionKind::student_t: {
      const bm::students_t_distribution<double> t(s.p3);
      return bm::cdf(t, (x - s.p1) / s.p2);
    }
    case DistributionKind::bernoulli:
      if (x < 0.0) return 0.0;
      if (x < 1.0) return 1.0 - s.p1;
      return 1.0;
    case DistributionKind::exponential:
      if (x <= 0.0) return 0.0;
      return -std::expm1(-s.p1 * x);
  }
  return 0.0;
}

namespace {

// Quantile given both the lower probability u and its complement q = 1 - u;
// whichever is smaller is used so neither tail loses precision.
double quantile_split(const DistributionSpec& s, double u, double q) {
  const bool upper = q < u;
  switch (s.kind) {
    case DistributionKind::normal:
      return s.p1 + s.p2 * (upper ? -normal_quantile(q) : normal_quantile(u));
    case DistributionKind::uniform:
      return upper ? s.p2 - q * (s.p2 - s.p1) : s.p1 + u * (s.p2 - s.p1);
    case DistributionKind::gamma: {
      const double shape = gamma_shape(s);
      if (shape == 1.0) {
        return gamma_scale(s) * (upper ? -std::log(q) : -std::log1p(-u));
      }
      return gamma_scale(s) *
             (upper ? bm::gamma_q_inv(shape, q) : bm::gamma_p_inv(shape, u));
    }
    case DistributionKind::beta:
      return upper ? bm::ibetac_inv(s.p1, s.p2, q) : bm::ibeta_inv(s.p1, s.p2, u);
    case DistributionKind::student_t: {
      const bm::students_t_distribution<double> t(s.p3);
      const double z =
          upper ? bm::quantile(bm::complement(t, q)) : bm::quantile(t, u);
      return s.p1 + s.p2 * z;
    }
    case DistributionKind::bernoulli:
      return u <= 1.0 - s.p1 ? 0.0 : 1.0;
    case DistributionKind::exponential:
      return (upper ? -std::log(q) : -std::log1p(-u)) / s.p1;
  }
  return 0.0;
}

}  // namespace

double quantile(const DistributionSpec& s, double u) {
  s.validate();
  if (!(u > 0.0 && u < 1.0)) {
    throw DomainError("quantile of " + s.describe() + ": u must lie in (0, 1)");
  }
  return quantile_split(s, u, 1.0 - u);
}

double value_at_score(const DistributionSpec& s, double score) {
  if (s.kind == DistributionKind::normal) return s.p1 + s.p2 * score;
  if (s.kind == DistributionKind::bernoulli) {
    if (s.p1 <= 0.0) return 0.0;
    if (s.p1 >= 1.0) return 1.0;
    return score > normal_quantile(1.0 - s.p1) ? 1.0 : 0.0;
  }
  const double u = normal_cdf(score);
  const double q = normal_cdf(-score);
  if (u <= 0.0 || q <= 0.0) {
    throw DomainError("value_at_score: score " + std::to_string(score) +
                      " lies beyond double-precision tail resolution");
  }
  return quantile_split(s, u, q);
}

}  // namespace sbice
