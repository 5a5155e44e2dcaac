#include <algorithm>
#include <cmath>
#include <numeric>

#include "sbice/errors.hpp"
#include "sbice/est/learners.hpp"
#include "sbice/stat/distributions.hpp"

namespace sbice {

FeatureBins FeatureBins::fit(const Eigen::MatrixXd& x) {
  FeatureBins b;
  b.edges_.resize(static_cast<std::size_t>(x.cols()));
  std::vector<double> v;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    v.assign(x.col(j).data(), x.col(j).data() + x.rows());
    std::sort(v.begin(), v.end());
    auto& e = b.edges_[j];
    std::vector<double> distinct = v;
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() <= static_cast<std::size_t>(kMaxBins)) {
      e.assign(distinct.begin(), distinct.end() - 1);
    } else {
      const std::size_t n = v.size();
      for (int k = 1; k < kMaxBins; ++k) {
        const double c = v[k * n / kMaxBins];
        if (c < v.back() && (e.empty() || c > e.back())) e.push_back(c);
      }
    }
  }
  return b;
}

FeatureBins::Codes FeatureBins::encode(const Eigen::MatrixXd& x) const {
  if (x.cols() != features()) throw DomainError("feature count differs from the fitted bins");
  Codes c(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const auto& e = edges_[j];
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      c(i, j) = static_cast<std::uint8_t>(std::lower_bound(e.begin(), e.end(), x(i, j)) - e.begin());
    }
  }
  return c;
}

namespace {

struct Builder {
  const FeatureBins& bins;
  const FeatureBins::Codes& codes;
  const std::vector<double>& g;
  const std::vector<double>& h;
  const TreeParams& params;
  Philox4x32* rng;
  std::vector<TreeNode>& nodes;
  std::vector<Eigen::Index>& rows;
  std::vector<int> features;

  static double leaf_value(double gs, double hs) { return hs > 0.0 ? -gs / hs : 0.0; }

  int build(std::size_t begin, std::size_t end, int depth) {
    double gs = 0.0, hs = 0.0;
    for (std::size_t k = begin; k < end; ++k) {
      gs += g[rows[k]];
      hs += h[rows[k]];
    }
    const int id = static_cast<int>(nodes.size());
    nodes.push_back(TreeNode{});
    nodes[id].value = leaf_value(gs, hs);
    const auto count = static_cast<long>(end - begin);
    if (depth >= params.max_depth || count < 2L * params.min_leaf || !(hs > 0.0)) return id;

    int n_feat = static_cast<int>(features.size());
    if (params.features_per_split > 0 && params.features_per_split < n_feat) {
      // Partial Fisher-Yates: the first k entries become the sample.
      for (int k = 0; k < params.features_per_split; ++k) {
        const int r = k + static_cast<int>(rng->uniform() * double(n_feat - k));
        std::swap(features[k], features[std::min(r, n_feat - 1)]);
      }
      n_feat = params.features_per_split;
    }
    const double parent = gs * gs / hs;
    double best_gain = 1e-12 * std::max(1.0, std::abs(parent));
    int best_feature = -1, best_bin = 0;
    std::vector<double> hg, hh;
    std::vector<long> hc;
    for (int fi = 0; fi < n_feat; ++fi) {
      const int f = features[fi];
      const int nb = bins.bins(f);
      if (nb < 2) continue;
      hg.assign(nb, 0.0);
      hh.assign(nb, 0.0);
      hc.assign(nb, 0);
      for (std::size_t k = begin; k < end; ++k) {
        const auto r = rows[k];
        const int c = codes(r, f);
        hg[c] += g[r];
        hh[c] += h[r];
        ++hc[c];
      }
      double gl = 0.0, hl = 0.0;
      long cl = 0;
      for (int b = 0; b + 1 < nb; ++b) {
        gl += hg[b];
        hl += hh[b];
        cl += hc[b];
        if (cl < params.min_leaf) continue;
        if (count - cl < params.min_leaf) break;
        const double hr = hs - hl;
        if (!(hl > 0.0) || !(hr > 0.0)) continue;
        const double gr = gs - gl;
        const double gain = gl * gl / hl + gr * gr / hr - parent;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = f;
          best_bin = b;
        }
      }
    }
    if (best_feature < 0) return id;
    const auto mid = std::stable_partition(rows.begin() + begin, rows.begin() + end,
                                           [&](Eigen::Index r) { return codes(r, best_feature) <= best_bin; });
    const auto split = static_cast<std::size_t>(mid - rows.begin());
    nodes[id].feature = best_feature;
    nodes[id].bin = best_bin;
    nodes[id].threshold = bins.edge(best_feature, best_bin);
    const int left = build(begin, split, depth + 1);
    const int right = build(split, end, depth + 1);
    nodes[id].left = left;
    nodes[id].right = right;
    return id;
  }
};

}  // namespace

RegressionTree RegressionTree::grow(const FeatureBins& bins, const FeatureBins::Codes& codes,
                                    const std::vector<double>& grad, const std::vector<double>& hess,
                                    std::vector<Eigen::Index> rows, const TreeParams& params,
                                    Philox4x32* rng) {
  if (params.features_per_split > 0 && rng == nullptr) {
    throw DomainError("feature subsampling needs a random engine");
  }
  RegressionTree tree;
  std::vector<int> features(static_cast<std::size_t>(bins.features()));
  std::iota(features.begin(), features.end(), 0);
  Builder b{bins, codes, grad, hess, params, rng, tree.nodes_, rows, std::move(features)};
  b.build(0, rows.size(), 0);
  return tree;
}

double RegressionTree::predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  int k = 0;
  while (nodes_[k].feature >= 0) {
    k = row[nodes_[k].feature] <= nodes_[k].threshold ? nodes_[k].left : nodes_[k].right;
  }
  return nodes_[k].value;
}

double RegressionTree::predict_codes(const FeatureBins::Codes& codes, Eigen::Index row) const {
  int k = 0;
  while (nodes_[k].feature >= 0) {
    k = codes(row, nodes_[k].feature) <= nodes_[k].bin ? nodes_[k].left : nodes_[k].right;
  }
  return nodes_[k].value;
}

Eigen::VectorXd RegressionTree::predict(const Eigen::MatrixXd& x) const {
  Eigen::VectorXd out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out[i] = predict_row(x.row(i));
  return out;
}

void GbtConfig::validate() const {
  if (n_trees < 1) throw ConfigError("gbt.n_trees must be at least 1");
  if (max_depth < 1) throw ConfigError("gbt.max_depth must be at least 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
    throw ConfigError("gbt.learning_rate must lie in (0, 1]");
  }
  if (min_leaf < 1) throw ConfigError("gbt.min_leaf must be at least 1");
}

namespace {

double mean_loss(GbtLoss loss, const Eigen::VectorXd& f, const Eigen::VectorXd& y) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (loss == GbtLoss::squared) {
      s += 0.5 * (y[i] - f[i]) * (y[i] - f[i]);
    } else {
      const double t = f[i];
      s += (t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t))) - y[i] * t;
    }
  }
  return s / double(y.size());
}

}  // namespace

GbtModel gbt_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GbtConfig& cfg,
                 GbtLoss loss) {
  cfg.validate();
  const Eigen::Index n = x.rows();
  if (y.size() != n) throw DomainError("gbt_fit: X and y lengths differ");
  if (n < 2L * cfg.min_leaf) throw DomainError("gbt_fit: needs at least 2 * min_leaf rows");
  GbtModel m;
  m.loss_ = loss;
  m.rate_ = cfg.learning_rate;
  const double mean = y.mean();
  if (loss == GbtLoss::squared) {
    m.base_ = mean;
  } else {
    for (double v : y) {
      if (v != 0.0 && v != 1.0) throw DomainError("gbt_fit: logistic targets must be 0 or 1");
    }
    m.base_ = logit(std::clamp(mean, 1e-6, 1.0 - 1e-6));
  }
  const FeatureBins bins = FeatureBins::fit(x);
  const auto codes = bins.encode(x);
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  Eigen::VectorXd f = Eigen::VectorXd::Constant(n, m.base_);
  std::vector<double> g(static_cast<std::size_t>(n)), h(static_cast<std::size_t>(n));
  const TreeParams params{cfg.max_depth, cfg.min_leaf, 0};
  m.training_loss_.push_back(mean_loss(loss, f, y));
  for (int t = 0; t < cfg.n_trees; ++t) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (loss == GbtLoss::squared) {
        g[i] = f[i] - y[i];
        h[i] = 1.0;
      } else {
        const double p = expit(f[i]);
        g[i] = p - y[i];
        h[i] = std::max(p * (1.0 - p), 1e-12);
      }
    }
    m.trees_.push_back(RegressionTree::grow(bins, codes, g, h, rows, params));
    const auto& tree = m.trees_.back();
    for (Eigen::Index i = 0; i < n; ++i) f[i] += m.rate_ * tree.predict_codes(codes, i);
    m.training_loss_.push_back(mean_loss(loss, f, y));
  }
  return m;
}

Eigen::VectorXd GbtModel::decision(const Eigen::MatrixXd& x) const {
  Eigen::VectorXd f = Eigen::VectorXd::Constant(x.rows(), base_);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (const auto& t : trees_) f[i] += rate_ * t.predict_row(x.row(i));
  }
  return f;
}

Eigen::VectorXd GbtModel::predict(const Eigen::MatrixXd& x) const {
  Eigen::VectorXd f = decision(x);
  if (loss_ == GbtLoss::logistic) {
    for (auto& v : f) v = expit(v);
  }
  return f;
}

}  // namespace sbice
