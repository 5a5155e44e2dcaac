#include <cmath>

#include "sbice/errors.hpp"
#include "sbice/est/learners.hpp"
#include "sbice/stat/distributions.hpp"

namespace sbice {
namespace {

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd a(x.rows(), x.cols() + 1);
  a.col(0).setOnes();
  a.rightCols(x.cols()) = x;
  return a;
}

// log(1 + e^t) without overflow.
double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

double log_likelihood(const Eigen::VectorXd& eta, const Eigen::VectorXd& y) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) s += y[i] * eta[i] - softplus(eta[i]);
  return s;
}

constexpr double kSeparationEta = 30.0;
constexpr double kClip = 1e-12;

}  // namespace

Eigen::VectorXd OlsFit::predict(const Eigen::MatrixXd& x) const {
  if (x.cols() + 1 != coefficients.size()) throw DomainError("ols predict: column count mismatch");
  return (x * coefficients.tail(x.cols())).array() + coefficients[0];
}

OlsFit ols_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (x.rows() != y.size()) throw DomainError("ols_fit: X and y lengths differ");
  if (!(x.rows() > x.cols() + 1)) throw DomainError("ols_fit: needs more rows than columns + 1");
  const Eigen::MatrixXd a = with_intercept(x);
  OlsFit fit;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() == a.cols()) {
    fit.coefficients = qr.solve(y);
    return fit;
  }
  fit.ridge = true;
  Eigen::MatrixXd gram = a.transpose() * a;
  gram.diagonal().array() += 1e-8;
  fit.coefficients = gram.ldlt().solve(a.transpose() * y);
  return fit;
}

Eigen::VectorXd LogisticFit::predict(const Eigen::MatrixXd& x) const {
  if (x.cols() + 1 != coefficients.size()) {
    throw DomainError("logistic predict: column count mismatch");
  }
  Eigen::VectorXd p = (x * coefficients.tail(x.cols())).array() + coefficients[0];
  for (auto& v : p) v = std::clamp(expit(v), kClip, 1.0 - kClip);
  return p;
}

LogisticFit logistic_irls(const Eigen::MatrixXd& a, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& offset) {
  const Eigen::Index n = a.rows();
  if (y.size() != n || offset.size() != n) throw DomainError("logistic: length mismatch");
  for (double v : y) {
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("logistic: responses must lie in [0, 1]");
  }
  LogisticFit fit;
  fit.coefficients = Eigen::VectorXd::Zero(a.cols());
  Eigen::VectorXd eta = offset;
  double ll = log_likelihood(eta, y);
  for (fit.iterations = 0; fit.iterations < 100; ++fit.iterations) {
    Eigen::VectorXd p(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      p[i] = expit(eta[i]);
      w[i] = std::max(p[i] * (1.0 - p[i]), 1e-300);
    }
    const Eigen::VectorXd grad = a.transpose() * (y - p);
    if (grad.cwiseAbs().maxCoeff() / double(n) <= 1e-10) {
      fit.converged = true;
      break;
    }
    Eigen::MatrixXd h = a.transpose() * w.asDiagonal() * a;
    h.diagonal().array() += 1e-12 * (1.0 + h.diagonal().maxCoeff());
    const Eigen::VectorXd step = h.ldlt().solve(grad);
    double t = 1.0;
    bool improved = false;
    for (int halving = 0; halving < 40; ++halving, t *= 0.5) {
      const Eigen::VectorXd beta = fit.coefficients + t * step;
      const Eigen::VectorXd e = a * beta + offset;
      const double cand = log_likelihood(e, y);
      if (cand >= ll) {
        improved = cand > ll;
        fit.coefficients = beta;
        eta = e;
        ll = cand;
        break;
      }
    }
    if (!improved) {
      // No further ascent possible at double precision.
      fit.converged = grad.cwiseAbs().maxCoeff() / double(n) <= 1e-6;
      break;
    }
    if (eta.cwiseAbs().maxCoeff() > kSeparationEta) {
      fit.separated = true;
      break;
    }
  }
  fit.log_likelihood = ll;
  return fit;
}

LogisticFit logistic_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& labels) {
  if (x.rows() != labels.size()) throw DomainError("logistic_fit: X and labels lengths differ");
  Eigen::Index ones = 0;
  for (double v : labels) {
    if (v != 0.0 && v != 1.0) throw DomainError("logistic_fit: labels must be 0 or 1");
    ones += v == 1.0;
  }
  if (ones == 0 || ones == labels.size()) throw DomainError("logistic_fit: both classes are needed");
  return logistic_irls(with_intercept(x), labels, Eigen::VectorXd::Zero(x.rows()));
}

}  // namespace sbice
