#pragma once

#include <span>

#include <Eigen/Dense>

namespace sbice {

/// A correlation matrix given on the Spearman scale.
class CorrelationMatrix {
 public:
  /// Validates symmetry, unit diagonal and entries in [-1, 1].
  static CorrelationMatrix spearman(Eigen::MatrixXd entries);
  static CorrelationMatrix identity(int dim);

  int dim() const { return static_cast<int>(entries_.rows()); }
  const Eigen::MatrixXd& spearman_entries() const { return entries_; }
  double operator()(int i, int j) const { return entries_(i, j); }

  /// Copy with entries (i, j) and (j, i) replaced.
  CorrelationMatrix with_entry(int i, int j, double value) const;

  /// Entrywise Spearman-to-Pearson conversion followed by projection onto the
  /// PSD cone when the converted matrix is not positive semidefinite.
  Eigen::MatrixXd pearson() const;

 private:
  explicit CorrelationMatrix(Eigen::MatrixXd entries)
      : entries_(std::move(entries)) {}
  Eigen::MatrixXd entries_;
};

/// r_P = 2 sin(pi r_S / 6).
double spearman_to_pearson(double r);

/// Clips eigenvalues below floor and rescales back to unit diagonal.
/// Returns the input unchanged when it is already PSD.
Eigen::MatrixXd nearest_psd_correlation(const Eigen::MatrixXd& m,
                                        double floor = 1e-10);

struct ConditionalNormal {
  double mean;
  double sd;
};

/// Conditional law of the last coordinate of a standard Gaussian vector with
/// correlation `pearson`, given the first dim-1 coordinates.
class CopulaConditioner {
 public:
  explicit CopulaConditioner(const Eigen::MatrixXd& pearson);

  ConditionalNormal condition(std::span<const double> scores) const;
  const Eigen::VectorXd& weights() const { return weights_; }
  double sd() const { return sd_; }

 private:
  Eigen::VectorXd weights_;
  double sd_ = 1.0;
};

ConditionalNormal gaussian_copula_conditional(const CorrelationMatrix& r,
                                              std::span<const double> scores);

}  // namespace sbice
