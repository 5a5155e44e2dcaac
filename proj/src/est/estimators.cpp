#include "sbice/est/estimators.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "sbice/errors.hpp"
#include "sbice/stat/distributions.hpp"

namespace sbice {
namespace {

struct Named {
  EstimatorId id;
  const char* key;
  const char* label;
};

constexpr std::array<Named, 7> kEstimators{{
    {EstimatorId::diff_means, "diff_means", "Diff. Means"},
    {EstimatorId::x_learner_linear, "x_learner_linear", "X (Lin)"},
    {EstimatorId::x_learner_gbt, "x_learner_gbt", "X (GBT)"},
    {EstimatorId::dml_linear, "dml_linear", "DML (Lin)"},
    {EstimatorId::dml_gbt, "dml_gbt", "DML (GBT)"},
    {EstimatorId::aipw_linear, "aipw_linear", "DR (Lin)"},
    {EstimatorId::tmle, "tmle", "TMLE"},
}};

// Raised inside an estimator; becomes the failure marker.
struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(k) = m.row(rows[k]);
  return out;
}

Eigen::VectorXd take(const Eigen::VectorXd& v, const std::vector<Eigen::Index>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) out[k] = v[rows[k]];
  return out;
}

// A fitted regression E[y | x] from either learner family.
class Regressor {
 public:
  Regressor(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, bool gbt, const GbtConfig& cfg) {
    if (gbt) {
      gbt_ = gbt_fit(x, y, cfg, GbtLoss::squared);
    } else {
      ols_ = ols_fit(x, y);
    }
  }
  Eigen::VectorXd operator()(const Eigen::MatrixXd& x) const {
    return gbt_ ? gbt_->predict(x) : ols_->predict(x);
  }

 private:
  std::optional<OlsFit> ols_;
  std::optional<GbtModel> gbt_;
};

Eigen::VectorXd propensity(const Eigen::MatrixXd& xtrain, const Eigen::VectorXd& ttrain,
                           const Eigen::MatrixXd& xeval, bool gbt, const GbtConfig& cfg) {
  const double treated = ttrain.sum();
  if (treated == 0.0 || treated == double(ttrain.size())) {
    throw Failure("a propensity training set holds a single treatment arm");
  }
  if (gbt) return gbt_fit(xtrain, ttrain, cfg, GbtLoss::logistic).predict(xeval);
  return logistic_fit(xtrain, ttrain).predict(xeval);
}

Eigen::VectorXd clipped(Eigen::VectorXd e, const LearnerConfig& cfg) {
  if (!cfg.clip_propensity) return e;
  Eigen::Index inside = 0;
  for (auto& v : e) {
    if (v > cfg.propensity_clip_low && v < cfg.propensity_clip_high) ++inside;
    v = std::clamp(v, cfg.propensity_clip_low, cfg.propensity_clip_high);
  }
  if (inside == 0) throw Failure("degenerate propensity: every unit is clipped");
  return e;
}

struct Arms {
  std::vector<Eigen::Index> treated;
  std::vector<Eigen::Index> control;
};

Arms split_arms(const Dataset& d) {
  Arms a;
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    (d.treatment()[i] == 1.0 ? a.treated : a.control).push_back(i);
  }
  return a;
}

double diff_means(const Dataset& d, const Arms& a) {
  const double m1 = take(d.outcome(), a.treated).mean();
  const double m0 = take(d.outcome(), a.control).mean();
  return m1 - m0;
}

double x_learner(const Dataset& d, const Arms& a, bool gbt, const LearnerConfig& cfg) {
  const Eigen::MatrixXd& x = d.covariates();
  const Eigen::MatrixXd x1 = take_rows(x, a.treated), x0 = take_rows(x, a.control);
  const Eigen::VectorXd y1 = take(d.outcome(), a.treated), y0 = take(d.outcome(), a.control);
  const Regressor mu0(x0, y0, gbt, cfg.gbt);
  const Regressor mu1(x1, y1, gbt, cfg.gbt);
  const Eigen::VectorXd d1 = y1 - mu0(x1);
  const Eigen::VectorXd d0 = mu1(x0) - y0;
  const Regressor tau1(x1, d1, gbt, cfg.gbt);
  const Regressor tau0(x0, d0, gbt, cfg.gbt);
  const Eigen::VectorXd e = propensity(x, d.treatment(), x, false, cfg.gbt);
  const Eigen::VectorXd t0 = tau0(x), t1 = tau1(x);
  return (e.array() * t0.array() + (1.0 - e.array()) * t1.array()).mean();
}

double dml(const Dataset& d, bool gbt, const LearnerConfig& cfg) {
  const Eigen::Index n = d.n();
  const auto fold = cross_fit_folds(n, cfg.cross_fit_folds, cfg.seed);
  Eigen::VectorXd m_hat(n), e_hat(n);
  std::vector<int> predicted_by(static_cast<std::size_t>(n), -1);
  for (int k = 0; k < cfg.cross_fit_folds; ++k) {
    std::vector<Eigen::Index> train, held;
    for (Eigen::Index i = 0; i < n; ++i) (fold[i] == k ? held : train).push_back(i);
    const Eigen::MatrixXd xt = take_rows(d.covariates(), train);
    const Eigen::MatrixXd xh = take_rows(d.covariates(), held);
    const Regressor m(xt, take(d.outcome(), train), gbt, cfg.gbt);
    const Eigen::VectorXd mh = m(xh);
    const Eigen::VectorXd eh = propensity(xt, take(d.treatment(), train), xh, gbt, cfg.gbt);
    for (std::size_t j = 0; j < held.size(); ++j) {
      if (predicted_by[held[j]] != -1) throw std::logic_error("row predicted by two folds");
      predicted_by[held[j]] = k;
      m_hat[held[j]] = mh[j];
      e_hat[held[j]] = eh[j];
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (predicted_by[i] != fold[i]) throw std::logic_error("row predicted by its own training fold");
  }
  const Eigen::ArrayXd rt = d.treatment().array() - e_hat.array();
  const Eigen::ArrayXd ry = d.outcome().array() - m_hat.array();
  const double denom = (rt * rt).sum();
  if (!(denom > 0.0)) throw Failure("treatment residuals vanish");
  return (rt * ry).sum() / denom;
}

double aipw(const Dataset& d, const Arms& a, const LearnerConfig& cfg) {
  const Eigen::MatrixXd& x = d.covariates();
  const auto mu1 = ols_fit(take_rows(x, a.treated), take(d.outcome(), a.treated));
  const auto mu0 = ols_fit(take_rows(x, a.control), take(d.outcome(), a.control));
  const Eigen::ArrayXd m1 = mu1.predict(x).array(), m0 = mu0.predict(x).array();
  const Eigen::ArrayXd e = clipped(propensity(x, d.treatment(), x, false, cfg.gbt), cfg).array();
  const Eigen::ArrayXd t = d.treatment().array(), y = d.outcome().array();
  return (m1 - m0 + t * (y - m1) / e - (1.0 - t) * (y - m0) / (1.0 - e)).mean();
}

void check_arm_sizes(const Dataset& d, const Arms& a, EstimatorId id, const LearnerConfig& cfg) {
  if (a.treated.empty() || a.control.empty()) throw Failure("a treatment arm is empty");
  if (id == EstimatorId::diff_means) return;
  std::size_t need = std::max<std::size_t>(5, static_cast<std::size_t>(d.p()) + 2);
  if (id == EstimatorId::x_learner_gbt || id == EstimatorId::dml_gbt) {
    need = std::max<std::size_t>(need, 2 * static_cast<std::size_t>(cfg.gbt.min_leaf));
  }
  if (a.treated.size() < need || a.control.size() < need) {
    throw Failure("each arm needs at least " + std::to_string(need) + " units");
  }
}

constexpr double kQBound = 1e-3;

}  // namespace

std::string to_string(EstimatorId id) {
  for (const auto& e : kEstimators) {
    if (e.id == id) return e.key;
  }
  return "unknown";
}

std::string display_name(EstimatorId id) {
  for (const auto& e : kEstimators) {
    if (e.id == id) return e.label;
  }
  return "unknown";
}

std::optional<EstimatorId> parse_estimator_id(const std::string& s) {
  for (const auto& e : kEstimators) {
    if (s == e.key) return e.id;
  }
  return std::nullopt;
}

const std::vector<EstimatorId>& all_estimators() {
  static const std::vector<EstimatorId> ids = [] {
    std::vector<EstimatorId> v;
    for (const auto& e : kEstimators) v.push_back(e.id);
    return v;
  }();
  return ids;
}

void LearnerConfig::validate() const {
  gbt.validate();
  if (cross_fit_folds < 2) throw ConfigError("cross_fit_folds must be at least 2");
  if (!(propensity_clip_low > 0.0 && propensity_clip_low < propensity_clip_high &&
        propensity_clip_high < 1.0)) {
    throw ConfigError("propensity clip bounds must satisfy 0 < low < high < 1");
  }
}

std::vector<int> cross_fit_folds(Eigen::Index n, int folds, std::uint64_t seed) {
  if (folds < 2 || n < folds) throw DomainError("cross-fitting needs 2 <= folds <= n");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  auto e = RandomStream(seed).substream(0xf01d).engine();
  for (Eigen::Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(e.uniform() * double(i + 1));
    std::swap(order[i], order[std::min(j, i)]);
  }
  std::vector<int> fold(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) fold[order[k]] = static_cast<int>(k % folds);
  return fold;
}

TmleFit tmle_fit(const Dataset& d, const LearnerConfig& cfg) {
  TmleFit f;
  const Eigen::Index n = d.n();
  f.low = d.outcome().minCoeff();
  f.high = d.outcome().maxCoeff();
  f.scaled_outcome = (d.outcome().array() - f.low) / (f.high - f.low);
  const Eigen::VectorXd& t = d.treatment();

  Eigen::MatrixXd xt(n, d.p() + 1);
  xt << d.covariates(), t;
  const OlsFit q = ols_fit(xt, f.scaled_outcome);
  Eigen::MatrixXd x1 = xt, x0 = xt;
  x1.col(d.p()).setOnes();
  x0.col(d.p()).setZero();
  auto bounded = [](Eigen::VectorXd v) {
    for (auto& x : v) x = std::clamp(x, kQBound, 1.0 - kQBound);
    return v;
  };
  const Eigen::VectorXd q_obs = bounded(q.predict(xt));
  const Eigen::VectorXd q1 = bounded(q.predict(x1));
  const Eigen::VectorXd q0 = bounded(q.predict(x0));

  f.propensity = clipped(propensity(d.covariates(), t, d.covariates(), false, cfg.gbt), cfg);
  Eigen::MatrixXd h(n, 2);
  Eigen::VectorXd offset(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    h(i, 0) = t[i] / f.propensity[i];
    h(i, 1) = -(1.0 - t[i]) / (1.0 - f.propensity[i]);
    offset[i] = logit(q_obs[i]);
  }
  const LogisticFit fl = logistic_irls(h, f.scaled_outcome, offset);
  // A separated fit is the limit where Q* reaches the observed outcomes.
  if (!fl.converged && !fl.separated) throw Failure("targeting step did not converge");
  f.epsilon1 = fl.coefficients[0];
  f.epsilon0 = fl.coefficients[1];
  f.q_observed.resize(n);
  f.q1.resize(n);
  f.q0.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    f.q_observed[i] = expit(offset[i] + f.epsilon1 * h(i, 0) + f.epsilon0 * h(i, 1));
    f.q1[i] = expit(logit(q1[i]) + f.epsilon1 / f.propensity[i]);
    f.q0[i] = expit(logit(q0[i]) - f.epsilon0 / (1.0 - f.propensity[i]));
  }
  return f;
}

AteEstimate estimate_ate(const Dataset& dataset, EstimatorId id, const LearnerConfig& cfg) {
  cfg.validate();
  AteEstimate out;
  out.estimator = id;
  try {
    const Arms arms = split_arms(dataset);
    check_arm_sizes(dataset, arms, id, cfg);
    double v = 0.0;
    switch (id) {
      case EstimatorId::diff_means: v = diff_means(dataset, arms); break;
      case EstimatorId::x_learner_linear: v = x_learner(dataset, arms, false, cfg); break;
      case EstimatorId::x_learner_gbt: v = x_learner(dataset, arms, true, cfg); break;
      case EstimatorId::dml_linear: v = dml(dataset, false, cfg); break;
      case EstimatorId::dml_gbt: v = dml(dataset, true, cfg); break;
      case EstimatorId::aipw_linear: v = aipw(dataset, arms, cfg); break;
      case EstimatorId::tmle:
        if (dataset.outcome().maxCoeff() == dataset.outcome().minCoeff()) {
          v = 0.0;
        } else {
          const TmleFit f = tmle_fit(dataset, cfg);
          v = (f.high - f.low) * (f.q1 - f.q0).mean();
        }
        break;
    }
    if (!std::isfinite(v)) throw Failure("non-finite estimate");
    out.value = v;
  } catch (const Failure& e) {
    out.failure = e.what();
  } catch (const DomainError& e) {
    out.failure = e.what();
  }
  return out;
}

}  // namespace sbice
