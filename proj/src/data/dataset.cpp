#include "sbice/data/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "sbice/errors.hpp"

namespace sbice {
namespace {

bool valid_label(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

std::vector<std::string_view> split_line(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

bool parse_real(std::string_view cell, double& out) {
  cell = trim(cell);
  if (cell.empty()) return false;
  if (cell.front() == '+') cell.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return ec == std::errc() && ptr == cell.data() + cell.size() && std::isfinite(out);
}

bool parse_treatment(std::string_view cell, double& out) {
  cell = trim(cell);
  if (cell == "true" || cell == "TRUE" || cell == "True") {
    out = 1.0;
    return true;
  }
  if (cell == "false" || cell == "FALSE" || cell == "False") {
    out = 0.0;
    return true;
  }
  double v = 0.0;
  if (!parse_real(cell, v) || (v != 0.0 && v != 1.0)) return false;
  out = v;
  return true;
}

double population_sd(const Eigen::Ref<const Eigen::VectorXd>& v, double mean) {
  return std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size()));
}

}  // namespace

void ColumnSchema::validate() const {
  if (covariate_columns.empty()) {
    throw ConfigError("schema needs at least one covariate column");
  }
  std::unordered_set<std::string> seen;
  auto add = [&](const std::string& label, const char* role) {
    if (!valid_label(label)) {
      throw ConfigError(std::string("invalid ") + role + " column label '" +
                        label + "' (allowed: [A-Za-z0-9_])");
    }
    if (!seen.insert(label).second) {
      throw ConfigError("duplicate column label '" + label + "'");
    }
  };
  add(treatment_column, "treatment");
  add(outcome_column, "outcome");
  for (const auto& c : covariate_columns) add(c, "covariate");
}

Dataset::Dataset(Eigen::MatrixXd covariates, Eigen::VectorXd treatment,
                 Eigen::VectorXd outcome, std::vector<std::string> names,
                 std::string treatment_name, std::string outcome_name)
    : covariates_(std::move(covariates)),
      treatment_(std::move(treatment)),
      outcome_(std::move(outcome)),
      covariate_names_(std::move(names)),
      treatment_name_(std::move(treatment_name)),
      outcome_name_(std::move(outcome_name)) {
  const Eigen::Index n = outcome_.size();
  if (n < 2) throw DataError("dataset needs at least 2 rows");
  if (treatment_.size() != n || covariates_.rows() != n) {
    throw DataError("dataset parts disagree on the number of rows");
  }
  if (static_cast<Eigen::Index>(covariate_names_.size()) != covariates_.cols()) {
    throw DataError("one name per covariate column is required");
  }
  if (!covariates_.allFinite() || !outcome_.allFinite()) {
    throw DataError("dataset contains NaN or infinite values");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (treatment_(i) != 0.0 && treatment_(i) != 1.0) {
      throw DataError("treatment value at row " + std::to_string(i) +
                      " is not binary");
    }
  }
}

ColumnSchema Dataset::schema() const {
  return {treatment_name_, outcome_name_, covariate_names_};
}

bool Dataset::same_schema(const Dataset& other) const {
  return covariate_names_ == other.covariate_names_ &&
         treatment_name_ == other.treatment_name_ &&
         outcome_name_ == other.outcome_name_;
}

Eigen::MatrixXd Dataset::joint_matrix() const {
  Eigen::MatrixXd m(n(), p() + 2);
  m.leftCols(p()) = covariates_;
  m.col(p()) = treatment_;
  m.col(p() + 1) = outcome_;
  return m;
}

Eigen::Index Dataset::treated_count() const {
  return static_cast<Eigen::Index>(treatment_.sum());
}

ColumnSchema schema_from_header(const std::string& header_line,
                                const std::string& treatment_column,
                                const std::string& outcome_column) {
  ColumnSchema schema{treatment_column, outcome_column, {}};
  bool has_t = false, has_y = false;
  for (auto cell : split_line(header_line)) {
    const std::string label(trim(cell));
    if (label == treatment_column) {
      has_t = true;
    } else if (label == outcome_column) {
      has_y = true;
    } else {
      schema.covariate_columns.push_back(label);
    }
  }
  if (!has_t || !has_y) {
    throw DataError("header lacks the '" + (has_t ? outcome_column : treatment_column) +
                    "' column");
  }
  return schema;
}

Dataset read_csv(std::istream& in, const ColumnSchema& schema,
                 const std::string& origin) {
  schema.validate();
  std::string line;
  if (!std::getline(in, line)) throw DataError(origin + ": empty file, no header row");
  std::unordered_map<std::string, std::size_t> index;
  const auto header = split_line(line);
  for (std::size_t i = 0; i < header.size(); ++i) {
    index.emplace(std::string(trim(header[i])), i);
  }
  auto locate = [&](const std::string& label) {
    const auto it = index.find(label);
    if (it == index.end()) {
      throw DataError(origin + ": missing column '" + label + "'");
    }
    return it->second;
  };
  const std::size_t t_col = locate(schema.treatment_column);
  const std::size_t y_col = locate(schema.outcome_column);
  std::vector<std::size_t> x_cols;
  for (const auto& c : schema.covariate_columns) x_cols.push_back(locate(c));

  std::vector<double> xs, ts, ys;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    auto fail = [&](const std::string& why) {
      return DataError(origin + ": row " + std::to_string(line_no - 1) +
                       " (line " + std::to_string(line_no) + "): " + why);
    };
    if (cells.size() != header.size()) {
      throw fail("expected " + std::to_string(header.size()) + " cells, found " +
                 std::to_string(cells.size()));
    }
    double t = 0.0, y = 0.0;
    if (!parse_treatment(cells[t_col], t)) {
      throw fail("treatment value '" + std::string(cells[t_col]) +
                 "' is not one of 0, 1, true, false");
    }
    if (!parse_real(cells[y_col], y)) {
      throw fail("outcome value '" + std::string(cells[y_col]) + "' is not a finite number");
    }
    for (std::size_t j = 0; j < x_cols.size(); ++j) {
      double x = 0.0;
      if (!parse_real(cells[x_cols[j]], x)) {
        throw fail("covariate '" + schema.covariate_columns[j] + "' value '" +
                   std::string(cells[x_cols[j]]) + "' is not a finite number");
      }
      xs.push_back(x);
    }
    ts.push_back(t);
    ys.push_back(y);
  }
  if (ys.empty()) throw DataError(origin + ": no data rows");
  const auto n = static_cast<Eigen::Index>(ys.size());
  const auto p = static_cast<Eigen::Index>(x_cols.size());
  Eigen::MatrixXd x = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                               Eigen::RowMajor>>(xs.data(), n, p);
  return Dataset(std::move(x), Eigen::Map<Eigen::VectorXd>(ts.data(), n),
                 Eigen::Map<Eigen::VectorXd>(ys.data(), n), schema.covariate_columns,
                 schema.treatment_column, schema.outcome_column);
}

Dataset read_csv(const std::filesystem::path& path, const ColumnSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_csv(in, schema, path.string());
}

std::string format_double(double value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

void write_csv(const Dataset& d, std::ostream& out) {
  for (const auto& name : d.covariate_names()) out << name << ',';
  out << d.treatment_name() << ',' << d.outcome_name() << '\n';
  std::string row;
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    row.clear();
    for (Eigen::Index j = 0; j < d.p(); ++j) {
      row += format_double(d.covariates()(i, j));
      row += ',';
    }
    row += d.treatment()(i) == 1.0 ? "1," : "0,";
    row += format_double(d.outcome()(i));
    row += '\n';
    out << row;
  }
}

void write_csv(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  write_csv(d, out);
  out.flush();
  if (!out) throw DataError("write failed for " + path.string());
}

std::string to_csv_string(const Dataset& d) {
  std::ostringstream out;
  write_csv(d, out);
  return out.str();
}

Standardizer Standardizer::fit(const Dataset& ref) {
  Eigen::VectorXd mean = ref.covariates().colwise().mean().transpose();
  Eigen::VectorXd sd(ref.p());
  for (Eigen::Index j = 0; j < ref.p(); ++j) {
    sd(j) = population_sd(ref.covariates().col(j), mean(j));
  }
  const double y_mean = ref.outcome().mean();
  return Standardizer(std::move(mean), std::move(sd), y_mean,
                      population_sd(ref.outcome(), y_mean));
}

Standardizer::Standardizer(Eigen::VectorXd covariate_mean,
                           Eigen::VectorXd covariate_sd, double outcome_mean,
                           double outcome_sd)
    : covariate_mean_(std::move(covariate_mean)),
      covariate_sd_(std::move(covariate_sd)),
      outcome_mean_(outcome_mean),
      outcome_sd_(outcome_sd > 0.0 ? outcome_sd : 1.0) {
  for (auto& s : covariate_sd_) {
    if (!(s > 0.0)) s = 1.0;
  }
}

void Standardizer::check(const Dataset& d) const {
  if (d.p() != covariate_mean_.size()) {
    throw DataError("standardizer was fitted on a different number of covariates");
  }
}

Dataset Standardizer::apply(const Dataset& d) const {
  check(d);
  Eigen::MatrixXd x = (d.covariates().rowwise() - covariate_mean_.transpose())
                          .array()
                          .rowwise() /
                      covariate_sd_.transpose().array();
  Eigen::VectorXd y = (d.outcome().array() - outcome_mean_) / outcome_sd_;
  return Dataset(std::move(x), d.treatment(), std::move(y), d.covariate_names(),
                 d.treatment_name(), d.outcome_name());
}

Dataset Standardizer::invert(const Dataset& d) const {
  check(d);
  Eigen::MatrixXd x = (d.covariates().array().rowwise() *
                       covariate_sd_.transpose().array())
                          .matrix()
                          .rowwise() +
                      covariate_mean_.transpose();
  Eigen::VectorXd y = d.outcome().array() * outcome_sd_ + outcome_mean_;
  return Dataset(std::move(x), d.treatment(), std::move(y), d.covariate_names(),
                 d.treatment_name(), d.outcome_name());
}

void Standardizer::apply_joint(Eigen::MatrixXd& joint) const {
  const Eigen::Index p = covariate_mean_.size();
  if (joint.cols() != p + 2) {
    throw DataError("joint matrix width does not match the standardizer");
  }
  for (Eigen::Index j = 0; j < p; ++j) {
    joint.col(j) = (joint.col(j).array() - covariate_mean_(j)) / covariate_sd_(j);
  }
  joint.col(p + 1) = (joint.col(p + 1).array() - outcome_mean_) / outcome_sd_;
}

Eigen::MatrixXd bootstrap_covariates(const Dataset& source, Eigen::Index n,
                                     const RandomStream& stream) {
  if (n < 1) throw DomainError("bootstrap size must be positive");
  auto engine = stream.engine();
  const auto rows = static_cast<std::uint64_t>(source.n());
  Eigen::MatrixXd out(n, source.p());
  for (Eigen::Index i = 0; i < n; ++i) {
    // Lemire-style multiply-shift; bias is below 2^-40 for realistic n.
    const auto pick = static_cast<Eigen::Index>(
        (static_cast<unsigned __int128>(engine()) * rows) >> 64);
    out.row(i) = source.covariates().row(pick);
  }
  return out;
}

}  // namespace sbice
