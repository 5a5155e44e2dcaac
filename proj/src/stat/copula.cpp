#include "sbice/stat/copula.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "sbice/errors.hpp"

namespace sbice {

double spearman_to_pearson(double r) {
  return 2.0 * std::sin(std::numbers::pi * r / 6.0);
}

CorrelationMatrix CorrelationMatrix::spearman(Eigen::MatrixXd m) {
  if (m.rows() == 0 || m.rows() != m.cols()) {
    throw ConfigError("correlation matrix must be square and non-empty");
  }
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (m(i, i) != 1.0) {
      throw ConfigError("correlation matrix diagonal entry " +
                        std::to_string(i) + " is not 1");
    }
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (!std::isfinite(m(i, j)) || m(i, j) < -1.0 || m(i, j) > 1.0) {
        throw ConfigError("correlation matrix entry out of [-1, 1]");
      }
      if (m(i, j) != m(j, i)) {
        throw ConfigError("correlation matrix is not symmetric");
      }
    }
  }
  return CorrelationMatrix(std::move(m));
}

CorrelationMatrix CorrelationMatrix::identity(int dim) {
  return CorrelationMatrix(Eigen::MatrixXd::Identity(dim, dim));
}

CorrelationMatrix CorrelationMatrix::with_entry(int i, int j,
                                                double value) const {
  if (i == j) throw ConfigError("cannot override a diagonal entry");
  if (!(value >= -1.0 && value <= 1.0)) {
    throw ConfigError("correlation override out of [-1, 1]");
  }
  Eigen::MatrixXd m = entries_;
  m(i, j) = value;
  m(j, i) = value;
  return CorrelationMatrix(std::move(m));
}

Eigen::MatrixXd CorrelationMatrix::pearson() const {
  Eigen::MatrixXd p = entries_.unaryExpr(&spearman_to_pearson);
  p.diagonal().setOnes();
  return nearest_psd_correlation(p);
}

Eigen::MatrixXd nearest_psd_correlation(const Eigen::MatrixXd& m,
                                        double floor) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  if (eig.info() != Eigen::Success) {
    throw DomainError("eigen-decomposition of correlation matrix failed");
  }
  if (eig.eigenvalues().minCoeff() >= floor) return m;
  const Eigen::VectorXd clipped = eig.eigenvalues().cwiseMax(floor);
  Eigen::MatrixXd out = eig.eigenvectors() * clipped.asDiagonal() *
                        eig.eigenvectors().transpose();
  const Eigen::VectorXd inv_sd = out.diagonal().cwiseSqrt().cwiseInverse();
  out = inv_sd.asDiagonal() * out * inv_sd.asDiagonal();
  out = 0.5 * (out + out.transpose());
  out.diagonal().setOnes();
  return out;
}

CopulaConditioner::CopulaConditioner(const Eigen::MatrixXd& pearson) {
  const Eigen::Index k = pearson.rows() - 1;
  if (k < 0 || pearson.rows() != pearson.cols()) {
    throw DomainError("copula conditioning needs a square matrix");
  }
  if (k == 0) {
    weights_.resize(0);
    sd_ = 1.0;
    return;
  }
  const Eigen::MatrixXd r11 = pearson.topLeftCorner(k, k);
  const Eigen::VectorXd r12 = pearson.topRightCorner(k, 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r11, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(r11);
  if (eig.info() != Eigen::Success || !(lo > 1e-12 * hi) ||
      ldlt.info() != Eigen::Success) {
    throw DomainError("ill-conditioned correlation matrix: the conditioning "
                      "block is singular");
  }
  weights_ = ldlt.solve(r12);
  const double var = 1.0 - r12.dot(weights_);
  sd_ = std::sqrt(std::clamp(var, 0.0, 1.0));
}

ConditionalNormal CopulaConditioner::condition(
    std::span<const double> scores) const {
  if (static_cast<Eigen::Index>(scores.size()) != weights_.size()) {
    throw DomainError("copula conditioning: expected " +
                      std::to_string(weights_.size()) + " scores, got " +
                      std::to_string(scores.size()));
  }
  double mean = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    mean += weights_(static_cast<Eigen::Index>(i)) * scores[i];
  }
  return {mean, sd_};
}

ConditionalNormal gaussian_copula_conditional(const CorrelationMatrix& r,
                                              std::span<const double> scores) {
  return CopulaConditioner(r.pearson()).condition(scores);
}

}  // namespace sbice
