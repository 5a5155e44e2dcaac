#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sbice/data/dataset.hpp"
#include "sbice/est/estimators.hpp"
#include "sbice/est/learners.hpp"
#include "sbice/sim/simulator.hpp"

namespace sbice {

struct ClassifierConfig {
  int n_trees = 200;
  int max_depth = 8;
  /// Features tried per split; 0 selects ceil(sqrt(d)).
  int features_per_split = 0;
  int folds = 5;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Bagged CART classifier with Gini splits and per-node feature sampling.
class RandomForest {
 public:
  static RandomForest fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& labels,
                          const ClassifierConfig& cfg);
  /// Tree votes averaged over trees; each tree votes its leaf's class-1 fraction.
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& x) const;
  std::size_t size() const { return trees_.size(); }

 private:
  std::vector<RegressionTree> trees_;
};

/// Mann-Whitney statistic with midranks for ties. Labels are 0/1 and both
/// classes must be present.
double roc_auc(std::span<const double> scores, std::span<const double> labels);

/// Stratified fold of each row.
std::vector<int> stratified_folds(std::span<const double> labels, int folds, std::uint64_t seed);

/// Out-of-fold AUC of a forest separating `generated` (label 1) from
/// `source` (label 0) over all columns.
double dataset_auc(const Dataset& generated, const Dataset& source, const ClassifierConfig& cfg);

struct AucReport {
  std::vector<double> per_dataset;
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation; 0 for a single dataset
};

/// One AUC per generated dataset; dataset i uses seed substream i of cfg.seed.
AucReport classifier_auc(const std::vector<GeneratedDataset>& generated, const Dataset& source,
                         const ClassifierConfig& cfg);

struct BseResult {
  /// Empty when every estimate failed.
  std::optional<double> value;
  int n_used = 0;
  int n_failed = 0;
};

/// Mean over usable datasets of [(estimate_i - tau_i) - (source_estimate - source_tau)]^2.
BseResult mean_bse(std::span<const AteEstimate> estimates, std::span<const double> tau_stars,
                   double source_estimate, double source_tau_star);
/// Variant with one source estimate per generated dataset.
BseResult mean_bse(std::span<const AteEstimate> estimates, std::span<const double> tau_stars,
                   std::span<const double> source_estimates, double source_tau_star);

/// estimates[e][i] is estimator e on dataset i. Runs pairs in parallel.
std::vector<std::vector<AteEstimate>> estimate_all(const std::vector<Dataset>& datasets,
                                                   const std::vector<EstimatorId>& estimators,
                                                   const LearnerConfig& cfg);

}  // namespace sbice
