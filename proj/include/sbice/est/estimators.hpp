#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sbice/data/dataset.hpp"
#include "sbice/est/learners.hpp"

namespace sbice {

enum class EstimatorId {
  diff_means,
  x_learner_linear,
  x_learner_gbt,
  dml_linear,
  dml_gbt,
  aipw_linear,
  tmle,
};

std::string to_string(EstimatorId id);
/// Table label, e.g. "X (Lin)".
std::string display_name(EstimatorId id);
std::optional<EstimatorId> parse_estimator_id(const std::string& s);
const std::vector<EstimatorId>& all_estimators();

struct LearnerConfig {
  GbtConfig gbt;
  int cross_fit_folds = 2;
  double propensity_clip_low = 0.01;
  double propensity_clip_high = 0.99;
  /// Disables clipping in aipw_linear and tmle when false.
  bool clip_propensity = true;
  std::uint64_t seed = 0;

  void validate() const;
};

struct AteEstimate {
  EstimatorId estimator = EstimatorId::diff_means;
  /// Empty when the estimator failed; `failure` then says why.
  std::optional<double> value;
  std::string failure;

  bool ok() const { return value.has_value(); }
};

/// Pure given (dataset, id, cfg). Never returns a non-finite value.
AteEstimate estimate_ate(const Dataset& dataset, EstimatorId id, const LearnerConfig& cfg);

/// Held-out fold of each row for K-fold cross-fitting, balanced and
/// shuffled by `seed`.
std::vector<int> cross_fit_folds(Eigen::Index n, int folds, std::uint64_t seed);

/// Fluctuated TMLE outcome predictions, exposed for diagnostics.
struct TmleFit {
  Eigen::VectorXd scaled_outcome;
  Eigen::VectorXd propensity;
  Eigen::VectorXd q_observed;  // targeted Q at the observed treatment
  Eigen::VectorXd q1;
  Eigen::VectorXd q0;
  double epsilon1 = 0.0;
  double epsilon0 = 0.0;
  double low = 0.0;
  double high = 1.0;
};
TmleFit tmle_fit(const Dataset& dataset, const LearnerConfig& cfg);

}  // namespace sbice
