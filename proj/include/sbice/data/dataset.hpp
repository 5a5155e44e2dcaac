#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sbice/stat/random.hpp"

namespace sbice {

/// Which CSV columns play which role. Covariates keep the listed order.
struct ColumnSchema {
  std::string treatment_column = "t";
  std::string outcome_column = "y";
  std::vector<std::string> covariate_columns;

  /// Labels must be distinct, non-empty, [A-Za-z0-9_], with one covariate.
  void validate() const;
};

/// Covariates X (n x p), binary treatment T and real outcome Y.
///
/// Construction validates the invariants: n >= 2, every value finite,
/// treatment in {0, 1}, matching lengths and one name per covariate column.
class Dataset {
 public:
  Dataset(Eigen::MatrixXd covariates, Eigen::VectorXd treatment,
          Eigen::VectorXd outcome, std::vector<std::string> covariate_names,
          std::string treatment_name = "t", std::string outcome_name = "y");

  Eigen::Index n() const { return outcome_.size(); }
  Eigen::Index p() const { return covariates_.cols(); }

  const Eigen::MatrixXd& covariates() const { return covariates_; }
  const Eigen::VectorXd& treatment() const { return treatment_; }
  const Eigen::VectorXd& outcome() const { return outcome_; }
  const std::vector<std::string>& covariate_names() const {
    return covariate_names_;
  }
  const std::string& treatment_name() const { return treatment_name_; }
  const std::string& outcome_name() const { return outcome_name_; }

  ColumnSchema schema() const;
  bool same_schema(const Dataset& other) const;

  /// Rows flattened to (covariates..., treatment, outcome).
  Eigen::MatrixXd joint_matrix() const;

  Eigen::Index treated_count() const;

 private:
  Eigen::MatrixXd covariates_;
  Eigen::VectorXd treatment_;
  Eigen::VectorXd outcome_;
  std::vector<std::string> covariate_names_;
  std::string treatment_name_;
  std::string outcome_name_;
};

Dataset read_csv(const std::filesystem::path& path, const ColumnSchema& schema);
Dataset read_csv(std::istream& in, const ColumnSchema& schema,
                 const std::string& origin = "<stream>");

/// Schema taken from a header: the named treatment and outcome columns, and
/// every other column as a covariate in header order.
ColumnSchema schema_from_header(const std::string& header_line,
                                const std::string& treatment_column,
                                const std::string& outcome_column);

/// Header is covariate names, then treatment, then outcome. Values use the
/// shortest decimal form that parses back to the identical double.
void write_csv(const Dataset& dataset, const std::filesystem::path& path);
void write_csv(const Dataset& dataset, std::ostream& out);
std::string to_csv_string(const Dataset& dataset);

/// Shortest round-trip decimal representation.
std::string format_double(double value);

/// Per-column location/scale taken from a reference dataset. Covers the
/// covariates and the outcome; treatment is never rescaled. Scales use the
/// population (divide-by-n) convention and fall back to 1 for constant
/// columns.
class Standardizer {
 public:
  static Standardizer fit(const Dataset& reference);
  Standardizer(Eigen::VectorXd covariate_mean, Eigen::VectorXd covariate_sd,
               double outcome_mean, double outcome_sd);

  Dataset apply(const Dataset& d) const;
  Dataset invert(const Dataset& d) const;

  /// Standardizes a joint matrix laid out as Dataset::joint_matrix().
  void apply_joint(Eigen::MatrixXd& joint) const;

  const Eigen::VectorXd& covariate_mean() const { return covariate_mean_; }
  const Eigen::VectorXd& covariate_sd() const { return covariate_sd_; }
  double outcome_mean() const { return outcome_mean_; }
  double outcome_sd() const { return outcome_sd_; }

 private:
  void check(const Dataset& d) const;

  Eigen::VectorXd covariate_mean_;
  Eigen::VectorXd covariate_sd_;
  double outcome_mean_;
  double outcome_sd_;
};

/// n rows sampled uniformly with replacement from the source covariates.
Eigen::MatrixXd bootstrap_covariates(const Dataset& source, Eigen::Index n,
                                     const RandomStream& stream);

}  // namespace sbice
