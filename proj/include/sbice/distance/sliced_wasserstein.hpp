#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sbice/data/dataset.hpp"
#include "sbice/stat/random.hpp"

namespace sbice {

struct DistanceConfig {
  int n_projections = 100;
  int order = 2;
  bool standardize = true;
  std::uint64_t projection_seed = 0;

  void validate() const;
};

/// Exact 1-D Wasserstein-p distance between two empirical measures.
double wasserstein_1d(std::span<const double> a, std::span<const double> b, int order);

/// Same, for inputs already sorted ascending. Returns W_p^p (no root).
double wasserstein_1d_sorted_power(std::span<const double> a, std::span<const double> b,
                                   int order);

/// Unit directions, one per column.
class ProjectionSet {
 public:
  /// Columns are normalized; a zero column is a ConfigError.
  explicit ProjectionSet(Eigen::MatrixXd directions);

  /// count directions uniform on the sphere in R^dim.
  static ProjectionSet random(Eigen::Index dim, int count, const RandomStream& stream);

  Eigen::Index dim() const { return directions_.rows(); }
  int count() const { return static_cast<int>(directions_.cols()); }
  const Eigen::MatrixXd& directions() const { return directions_; }

 private:
  Eigen::MatrixXd directions_;
};

/// Rows of `points` projected on every direction, each column sorted.
Eigen::MatrixXd sorted_projections(const Eigen::MatrixXd& points, const ProjectionSet& p);

/// (mean over directions of W_p^p)^(1/p) between two point clouds.
double sliced_wasserstein(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                          const ProjectionSet& projections, int order);

/// Dataset form: rows are (covariates..., treatment, outcome), standardized by
/// `standardizer` when cfg.standardize, projected on directions drawn from
/// cfg.projection_seed. DataError on schema mismatch.
double sliced_wasserstein(const Dataset& a, const Dataset& b, const DistanceConfig& cfg,
                          const Standardizer& standardizer);

/// A fixed reference dataset with its sorted projections cached, for many
/// distance evaluations against the same source and directions.
class SlicedWassersteinReference {
 public:
  SlicedWassersteinReference(const Dataset& reference, ProjectionSet projections, int order,
                             std::optional<Standardizer> standardizer);

  double distance(const Dataset& other) const;
  const ProjectionSet& projections() const { return projections_; }

 private:
  Eigen::MatrixXd prepare(const Dataset& d) const;

  ColumnSchema schema_;
  ProjectionSet projections_;
  int order_;
  std::optional<Standardizer> standardizer_;
  Eigen::MatrixXd sorted_reference_;
};

}  // namespace sbice
