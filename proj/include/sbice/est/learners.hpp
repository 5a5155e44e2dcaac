#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "sbice/stat/random.hpp"

namespace sbice {

/// Least squares with an intercept. Coefficients are (intercept, slopes...).
struct OlsFit {
  Eigen::VectorXd coefficients;
  /// Design was rank deficient; solved with a 1e-8 ridge penalty instead.
  bool ridge = false;

  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
};

/// Requires n > p + 1.
OlsFit ols_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

struct LogisticFit {
  Eigen::VectorXd coefficients;
  /// Iterations diverged towards perfect separation; predictions are clipped.
  bool separated = false;
  bool converged = false;
  int iterations = 0;
  double log_likelihood = 0.0;

  /// Probabilities for a design without the intercept column.
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
};

/// Maximum likelihood with an intercept, by IRLS. Needs both classes.
LogisticFit logistic_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& labels);

/// IRLS on an explicit design (no implicit intercept) with a fixed offset.
/// Responses may be fractional in [0, 1] (quasi-binomial).
LogisticFit logistic_irls(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& offset);

/// Per-feature quantile cut points; codes fit in one byte.
class FeatureBins {
 public:
  static constexpr int kMaxBins = 255;

  static FeatureBins fit(const Eigen::MatrixXd& x);

  using Codes = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;
  /// code = number of cut points strictly below the value.
  Codes encode(const Eigen::MatrixXd& x) const;
  int bins(Eigen::Index feature) const { return static_cast<int>(edges_[feature].size()) + 1; }
  double edge(Eigen::Index feature, int bin) const { return edges_[feature][bin]; }
  Eigen::Index features() const { return static_cast<Eigen::Index>(edges_.size()); }

 private:
  std::vector<std::vector<double>> edges_;
};

struct TreeNode {
  int feature = -1;  // -1 for a leaf
  int bin = 0;
  double threshold = 0.0;  // rows with x <= threshold go left
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct TreeParams {
  int max_depth = 3;
  int min_leaf = 5;
  /// Features examined at each split; 0 examines all of them.
  int features_per_split = 0;
};

/// Second-order regression tree. Leaves hold -sum(g) / sum(h); splits
/// maximize G_L^2/H_L + G_R^2/H_R - G^2/H.
class RegressionTree {
 public:
  /// `rows` may repeat indices (bootstrap). `rng` is used only when
  /// features_per_split is set.
  static RegressionTree grow(const FeatureBins& bins, const FeatureBins::Codes& codes,
                             const std::vector<double>& grad, const std::vector<double>& hess,
                             std::vector<Eigen::Index> rows, const TreeParams& params,
                             Philox4x32* rng = nullptr);

  double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
  double predict_codes(const FeatureBins::Codes& codes, Eigen::Index row) const;
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
  const std::vector<TreeNode>& nodes() const { return nodes_; }

 private:
  std::vector<TreeNode> nodes_;
};

struct GbtConfig {
  int n_trees = 100;
  int max_depth = 3;
  double learning_rate = 0.1;
  int min_leaf = 5;

  void validate() const;
};

enum class GbtLoss { squared, logistic };

class GbtModel {
 public:
  /// Raw additive score (log-odds under the logistic loss).
  Eigen::VectorXd decision(const Eigen::MatrixXd& x) const;
  /// Mean prediction, or probability under the logistic loss.
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
  /// Mean training loss after 0, 1, ..., n_trees stages.
  const std::vector<double>& training_loss() const { return training_loss_; }
  std::size_t size() const { return trees_.size(); }

 private:
  friend GbtModel gbt_fit(const Eigen::MatrixXd&, const Eigen::VectorXd&, const GbtConfig&,
                          GbtLoss);
  GbtLoss loss_ = GbtLoss::squared;
  double base_ = 0.0;
  double rate_ = 0.1;
  std::vector<RegressionTree> trees_;
  std::vector<double> training_loss_;
};

/// Requires n >= 2 * min_leaf; logistic targets must be 0/1.
GbtModel gbt_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GbtConfig& cfg,
                 GbtLoss loss);

}  // namespace sbice
