#include "sbice/distance/sliced_wasserstein.hpp"

#include <algorithm>
#include <cmath>

#include "sbice/errors.hpp"

namespace sbice {
namespace {

double power(double x, int order) { return order == 1 ? x : x * x; }

double root(double x, int order) { return order == 1 ? x : std::sqrt(x); }

void check_order(int order) {
  if (order != 1 && order != 2) throw ConfigError("Wasserstein order must be 1 or 2");
}

void require_same_schema(const Dataset& a, const Dataset& b) {
  if (!a.same_schema(b)) throw DataError("datasets have different column schemas");
}

}  // namespace

void DistanceConfig::validate() const {
  if (n_projections < 1) throw ConfigError("n_projections must be at least 1");
  check_order(order);
}

double wasserstein_1d_sorted_power(std::span<const double> a, std::span<const double> b,
                                   int order) {
  const std::size_t n = a.size(), m = b.size();
  if (n == 0 || m == 0) throw DomainError("wasserstein_1d needs non-empty samples");
  if (n == m) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += power(std::abs(a[i] - b[i]), order);
    return s / static_cast<double>(n);
  }
  // Piecewise-constant quantile functions on the merged breakpoint grid
  // {i/n} U {j/m}; breakpoints are ordered exactly with integer products.
  double total = 0.0, prev = 0.0;
  std::size_t i = 0, j = 0;
  while (i < n && j < m) {
    const auto ni = static_cast<unsigned __int128>(i + 1) * m;
    const auto mj = static_cast<unsigned __int128>(j + 1) * n;
    double next;
    if (ni < mj) {
      next = static_cast<double>(i + 1) / static_cast<double>(n);
    } else {
      next = static_cast<double>(j + 1) / static_cast<double>(m);
    }
    total += (next - prev) * power(std::abs(a[i] - b[j]), order);
    prev = next;
    if (ni <= mj) ++i;
    if (mj <= ni) ++j;
  }
  return total;
}

double wasserstein_1d(std::span<const double> a, std::span<const double> b, int order) {
  check_order(order);
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  return root(wasserstein_1d_sorted_power(sa, sb, order), order);
}

ProjectionSet::ProjectionSet(Eigen::MatrixXd directions) : directions_(std::move(directions)) {
  if (directions_.rows() == 0 || directions_.cols() == 0) {
    throw ConfigError("projection set needs at least one direction");
  }
  for (Eigen::Index k = 0; k < directions_.cols(); ++k) {
    const double norm = directions_.col(k).norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) throw ConfigError("zero projection direction");
    directions_.col(k) /= norm;
  }
}

ProjectionSet ProjectionSet::random(Eigen::Index dim, int count, const RandomStream& stream) {
  if (dim < 1 || count < 1) throw ConfigError("projection set needs dim >= 1 and count >= 1");
  auto e = stream.engine();
  Eigen::MatrixXd d(dim, count);
  for (int k = 0; k < count; ++k) {
    do {
      for (Eigen::Index r = 0; r < dim; ++r) d(r, k) = e.normal();
    } while (d.col(k).norm() == 0.0);
  }
  return ProjectionSet(std::move(d));
}

Eigen::MatrixXd sorted_projections(const Eigen::MatrixXd& points, const ProjectionSet& p) {
  if (points.cols() != p.dim()) {
    throw DataError("points have " + std::to_string(points.cols()) +
                    " columns, projections expect " + std::to_string(p.dim()));
  }
  Eigen::MatrixXd proj = points * p.directions();
  for (Eigen::Index k = 0; k < proj.cols(); ++k) {
    double* col = proj.col(k).data();
    std::sort(col, col + proj.rows());
  }
  return proj;
}

namespace {

double sliced_from_sorted(const Eigen::MatrixXd& sa, const Eigen::MatrixXd& sb, int order) {
  double total = 0.0;
  for (Eigen::Index k = 0; k < sa.cols(); ++k) {
    total += wasserstein_1d_sorted_power(
        std::span<const double>(sa.col(k).data(), static_cast<std::size_t>(sa.rows())),
        std::span<const double>(sb.col(k).data(), static_cast<std::size_t>(sb.rows())), order);
  }
  return root(total / static_cast<double>(sa.cols()), order);
}

}  // namespace

double sliced_wasserstein(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                          const ProjectionSet& projections, int order) {
  check_order(order);
  return sliced_from_sorted(sorted_projections(a, projections), sorted_projections(b, projections),
                            order);
}

double sliced_wasserstein(const Dataset& a, const Dataset& b, const DistanceConfig& cfg,
                          const Standardizer& standardizer) {
  cfg.validate();
  require_same_schema(a, b);
  Eigen::MatrixXd ja = a.joint_matrix();
  Eigen::MatrixXd jb = b.joint_matrix();
  if (cfg.standardize) {
    standardizer.apply_joint(ja);
    standardizer.apply_joint(jb);
  }
  const auto p = ProjectionSet::random(ja.cols(), cfg.n_projections, RandomStream(cfg.projection_seed));
  return sliced_wasserstein(ja, jb, p, cfg.order);
}

SlicedWassersteinReference::SlicedWassersteinReference(const Dataset& reference,
                                                       ProjectionSet projections, int order,
                                                       std::optional<Standardizer> standardizer)
    : schema_(reference.schema()),
      projections_(std::move(projections)),
      order_(order),
      standardizer_(std::move(standardizer)) {
  check_order(order_);
  sorted_reference_ = sorted_projections(prepare(reference), projections_);
}

Eigen::MatrixXd SlicedWassersteinReference::prepare(const Dataset& d) const {
  const ColumnSchema s = d.schema();
  if (s.covariate_columns != schema_.covariate_columns ||
      s.treatment_column != schema_.treatment_column ||
      s.outcome_column != schema_.outcome_column) {
    throw DataError("dataset schema differs from the reference dataset");
  }
  Eigen::MatrixXd joint = d.joint_matrix();
  if (standardizer_) standardizer_->apply_joint(joint);
  return joint;
}

double SlicedWassersteinReference::distance(const Dataset& other) const {
  return sliced_from_sorted(sorted_reference_, sorted_projections(prepare(other), projections_),
                            order_);
}

}  // namespace sbice
