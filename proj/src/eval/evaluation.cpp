#include "sbice/eval/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sbice/errors.hpp"
#include "sbice/parallel.hpp"

namespace sbice {

void ClassifierConfig::validate() const {
  if (n_trees < 1) throw ConfigError("classifier.n_trees must be at least 1");
  if (max_depth < 1) throw ConfigError("classifier.max_depth must be at least 1");
  if (features_per_split < 0) throw ConfigError("classifier.features_per_split must be >= 0");
  if (folds < 2) throw ConfigError("classifier.folds must be at least 2");
}

RandomForest RandomForest::fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& labels,
                               const ClassifierConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = x.rows();
  if (labels.size() != n) throw DomainError("random forest: X and labels lengths differ");
  Eigen::Index ones = 0;
  for (double v : labels) {
    if (v != 0.0 && v != 1.0) throw DomainError("random forest: labels must be 0 or 1");
    ones += v == 1.0;
  }
  if (ones == 0 || ones == n) throw DomainError("random forest: both classes are needed");

  const FeatureBins bins = FeatureBins::fit(x);
  const auto codes = bins.encode(x);
  // Squared-error gain on 0/1 targets is the Gini decrease; leaves hold the
  // class-1 fraction.
  std::vector<double> g(static_cast<std::size_t>(n)), h(static_cast<std::size_t>(n), 1.0);
  for (Eigen::Index i = 0; i < n; ++i) g[i] = -labels[i];
  const int d = static_cast<int>(x.cols());
  TreeParams params;
  params.max_depth = cfg.max_depth;
  params.min_leaf = 1;
  params.features_per_split =
      cfg.features_per_split > 0 ? std::min(cfg.features_per_split, d)
                                 : static_cast<int>(std::ceil(std::sqrt(double(d))));
  RandomForest rf;
  rf.trees_.reserve(static_cast<std::size_t>(cfg.n_trees));
  const RandomStream root(cfg.seed);
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
  for (int t = 0; t < cfg.n_trees; ++t) {
    auto e = root.substream(static_cast<std::uint64_t>(t)).engine();
    for (auto& r : rows) r = std::min(static_cast<Eigen::Index>(e.uniform() * double(n)), n - 1);
    rf.trees_.push_back(RegressionTree::grow(bins, codes, g, h, rows, params, &e));
  }
  return rf;
}

Eigen::VectorXd RandomForest::predict_proba(const Eigen::MatrixXd& x) const {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double votes = 0.0;
    for (const auto& t : trees_) votes += t.predict_row(x.row(i));
    p[i] = votes / double(trees_.size());
  }
  return p;
}

double roc_auc(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) throw DomainError("roc_auc: lengths differ");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  double positives = 0.0;
  for (std::size_t k = 0; k < n;) {
    std::size_t j = k;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[k]]) ++j;
    const double midrank = 0.5 * double(k + j) + 1.0;
    for (std::size_t m = k; m <= j; ++m) {
      const double l = labels[order[m]];
      if (l != 0.0 && l != 1.0) throw DomainError("roc_auc: labels must be 0 or 1");
      if (l == 1.0) {
        rank_sum += midrank;
        positives += 1.0;
      }
    }
    k = j + 1;
  }
  const double negatives = double(n) - positives;
  if (positives == 0.0 || negatives == 0.0) throw DomainError("roc_auc: both classes are needed");
  return (rank_sum - positives * (positives + 1.0) / 2.0) / (positives * negatives);
}

std::vector<int> stratified_folds(std::span<const double> labels, int folds, std::uint64_t seed) {
  std::vector<int> fold(labels.size(), 0);
  for (int cls = 0; cls < 2; ++cls) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == double(cls)) idx.push_back(i);
    }
    if (idx.size() < static_cast<std::size_t>(folds)) {
      throw DomainError("each class needs at least one row per fold");
    }
    auto e = RandomStream(seed).substream(0x5f, static_cast<std::uint64_t>(cls)).engine();
    for (std::size_t i = idx.size() - 1; i > 0; --i) {
      const auto j = std::min(static_cast<std::size_t>(e.uniform() * double(i + 1)), i);
      std::swap(idx[i], idx[j]);
    }
    for (std::size_t k = 0; k < idx.size(); ++k) fold[idx[k]] = static_cast<int>(k % folds);
  }
  return fold;
}

double dataset_auc(const Dataset& generated, const Dataset& source, const ClassifierConfig& cfg) {
  cfg.validate();
  if (!generated.same_schema(source)) {
    throw DataError("generated dataset columns differ from the source columns");
  }
  const Eigen::Index ng = generated.n(), ns = source.n(), n = ng + ns;
  Eigen::MatrixXd x(n, generated.p() + 2);
  x.topRows(ng) = generated.joint_matrix();
  x.bottomRows(ns) = source.joint_matrix();
  Eigen::VectorXd labels(n);
  labels.head(ng).setOnes();
  labels.tail(ns).setZero();
  const auto fold = stratified_folds(std::span<const double>(labels.data(), n), cfg.folds, cfg.seed);
  Eigen::VectorXd oof(n);
  for (int k = 0; k < cfg.folds; ++k) {
    std::vector<Eigen::Index> train, held;
    for (Eigen::Index i = 0; i < n; ++i) (fold[i] == k ? held : train).push_back(i);
    Eigen::MatrixXd xt(static_cast<Eigen::Index>(train.size()), x.cols());
    Eigen::VectorXd lt(static_cast<Eigen::Index>(train.size()));
    for (std::size_t r = 0; r < train.size(); ++r) {
      xt.row(r) = x.row(train[r]);
      lt[r] = labels[train[r]];
    }
    Eigen::MatrixXd xh(static_cast<Eigen::Index>(held.size()), x.cols());
    for (std::size_t r = 0; r < held.size(); ++r) xh.row(r) = x.row(held[r]);
    ClassifierConfig fcfg = cfg;
    fcfg.seed = RandomStream(cfg.seed).substream(0xf0, static_cast<std::uint64_t>(k)).derived_seed();
    const auto p = RandomForest::fit(xt, lt, fcfg).predict_proba(xh);
    for (std::size_t r = 0; r < held.size(); ++r) oof[held[r]] = p[r];
  }
  return roc_auc(std::span<const double>(oof.data(), n), std::span<const double>(labels.data(), n));
}

AucReport classifier_auc(const std::vector<GeneratedDataset>& generated, const Dataset& source,
                         const ClassifierConfig& cfg) {
  if (generated.empty()) throw DomainError("classifier_auc needs at least one generated dataset");
  cfg.validate();
  AucReport r;
  r.per_dataset.resize(generated.size());
  parallel_for(generated.size(), [&](std::size_t i) {
    ClassifierConfig c = cfg;
    c.seed = RandomStream(cfg.seed).substream(i).derived_seed();
    r.per_dataset[i] = dataset_auc(generated[i].dataset, source, c);
  });
  const double n = double(r.per_dataset.size());
  r.mean = std::accumulate(r.per_dataset.begin(), r.per_dataset.end(), 0.0) / n;
  if (r.per_dataset.size() > 1) {
    double ss = 0.0;
    for (double a : r.per_dataset) ss += (a - r.mean) * (a - r.mean);
    r.sd = std::sqrt(ss / (n - 1.0));
  }
  return r;
}

namespace {

template <class SourceAt>
BseResult mean_bse_impl(std::span<const AteEstimate> estimates, std::span<const double> tau_stars,
                        const SourceAt& source_bias) {
  if (estimates.size() != tau_stars.size()) throw DomainError("mean_bse: lengths differ");
  if (estimates.empty()) throw DomainError("mean_bse needs at least one dataset");
  BseResult r;
  double sum = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    if (!estimates[i].ok()) {
      ++r.n_failed;
      continue;
    }
    const double diff = (*estimates[i].value - tau_stars[i]) - source_bias(i);
    sum += diff * diff;
    ++r.n_used;
  }
  if (r.n_used > 0) r.value = sum / double(r.n_used);
  return r;
}

}  // namespace

BseResult mean_bse(std::span<const AteEstimate> estimates, std::span<const double> tau_stars,
                   double source_estimate, double source_tau_star) {
  const double b = source_estimate - source_tau_star;
  return mean_bse_impl(estimates, tau_stars, [b](std::size_t) { return b; });
}

BseResult mean_bse(std::span<const AteEstimate> estimates, std::span<const double> tau_stars,
                   std::span<const double> source_estimates, double source_tau_star) {
  if (source_estimates.size() != estimates.size()) {
    throw DomainError("mean_bse: one source estimate per dataset is needed");
  }
  return mean_bse_impl(estimates, tau_stars, [&](std::size_t i) {
    return source_estimates[i] - source_tau_star;
  });
}

std::vector<std::vector<AteEstimate>> estimate_all(const std::vector<Dataset>& datasets,
                                                   const std::vector<EstimatorId>& estimators,
                                                   const LearnerConfig& cfg) {
  std::vector<std::vector<AteEstimate>> out(estimators.size(),
                                            std::vector<AteEstimate>(datasets.size()));
  const std::size_t nd = datasets.size();
  parallel_for(estimators.size() * nd, [&](std::size_t k) {
    out[k / nd][k % nd] = estimate_ate(datasets[k % nd], estimators[k / nd], cfg);
  });
  return out;
}

}  // namespace sbice
