// Regression and classification primitives used by all nuisance estimation:
// gaussian/binomial GLMs (IRLS), k-nearest-neighbor, shallow regression trees,
// deterministic fold assignment, and a cross-validated convex stack.
//
// Binomial fitting accepts fractional targets in [0,1]; pseudo-outcomes are
// probabilities. All fits are deterministic given (data, spec, seed).
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <map>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include "lmtp/common.hpp"
#include "lmtp/rng.hpp"

namespace lmtp {

enum class Family { GaussianGlm, BinomialGlm, Knn, Tree };

inline std::string family_name(Family f) {
  switch (f) {
    case Family::GaussianGlm: return "gaussian-glm";
    case Family::BinomialGlm: return "binomial-glm";
    case Family::Knn: return "k-nearest-neighbor";
    case Family::Tree: return "regression-tree";
  }
  return "?";
}

inline Family parse_family(const std::string& s) {
  if (s == "gaussian-glm") return Family::GaussianGlm;
  if (s == "binomial-glm") return Family::BinomialGlm;
  if (s == "k-nearest-neighbor" || s == "knn") return Family::Knn;
  if (s == "regression-tree" || s == "tree") return Family::Tree;
  throw config_error("unknown learner family: " + s);
}

struct LearnerSpec {
  Family family = Family::GaussianGlm;
  double ridge = 0.0;       // >= 0
  int k = 5;                // k-NN
  int max_depth = 3;        // tree
  int min_leaf = 10;        // tree
  bool saturated = false;   // GLM on the full interaction cells of discrete features
  std::vector<std::string> features;  // restriction by column name; empty = all

  bool data_adaptive() const { return family == Family::Knn || family == Family::Tree; }

  void check() const {
    if (ridge < 0.0) throw config_error("ridge penalty must be nonnegative");
    if (family == Family::Knn && k < 1) throw config_error("k-NN needs k >= 1");
    if (family == Family::Tree && (max_depth < 0 || min_leaf < 1))
      throw config_error("bad tree hyperparameters");
  }
};

struct DesignMatrix {
  Eigen::MatrixXd X;                // n x p
  std::vector<std::string> names;   // size p

  int n() const { return static_cast<int>(X.rows()); }
  int p() const { return static_cast<int>(X.cols()); }

  // "(intercept)" is a pseudo-feature resolving to a constant column; a spec
  // whose feature list is just {"(intercept)"} yields an intercept-only model.
  DesignMatrix select(const std::vector<std::string>& wanted) const {
    if (wanted.empty()) return *this;
    DesignMatrix out;
    out.X.resize(X.rows(), static_cast<Eigen::Index>(wanted.size()));
    for (std::size_t j = 0; j < wanted.size(); ++j) {
      if (wanted[j] == "(intercept)") {
        out.X.col(static_cast<Eigen::Index>(j)).setOnes();
        out.names.push_back(wanted[j]);
        continue;
      }
      auto it = std::find(names.begin(), names.end(), wanted[j]);
      if (it == names.end())
        throw data_error("feature '" + wanted[j] + "' absent from design matrix");
      out.X.col(static_cast<Eigen::Index>(j)) = X.col(it - names.begin());
      out.names.push_back(wanted[j]);
    }
    return out;
  }

  DesignMatrix rows(const std::vector<int>& idx) const {
    DesignMatrix out;
    out.names = names;
    out.X.resize(static_cast<Eigen::Index>(idx.size()), X.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.X.row(static_cast<Eigen::Index>(i)) = X.row(idx[i]);
    return out;
  }
};

// ---------------------------------------------------------------------------
// fitted models

namespace detail {

struct GlmFit {
  Eigen::VectorXd coef;  // intercept first
  bool binomial = false;
};

// Saturated GLM on discrete features: the MLE is the weighted cell mean, so it
// is fit in closed form. Unseen cells fall back to the global mean.
struct SaturatedFit {
  std::map<std::vector<double>, double> cell_mean;
  double global_mean = 0.0;
  bool binomial = false;
};

struct KnnFit {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  Eigen::VectorXd w;
  int k = 1;
};

struct TreeNode {
  int feature = -1;      // -1 = leaf
  double threshold = 0.0;
  int left = -1, right = -1;
  double value = 0.0;
};
struct TreeFit {
  std::vector<TreeNode> nodes;
};

}  // namespace detail

class FittedModel {
public:
  LearnerSpec spec;
  std::vector<std::string> signature;  // training feature names, in order
  bool ridge_fallback = false;         // singular design handled with lambda = 1e-6

  std::variant<detail::GlmFit, detail::SaturatedFit, detail::KnnFit, detail::TreeFit> fit;

  Eigen::VectorXd predict(const DesignMatrix& full) const {
    const DesignMatrix d = full.select(signature);
    if (const auto* g = std::get_if<detail::GlmFit>(&fit)) {
      Eigen::VectorXd eta = Eigen::VectorXd::Constant(d.n(), g->coef[0]);
      eta += d.X * g->coef.tail(g->coef.size() - 1);
      if (!g->binomial) return eta;
      Eigen::VectorXd p(d.n());
      for (int i = 0; i < d.n(); ++i) p[i] = expit(eta[i]);
      return p;
    }
    if (const auto* s = std::get_if<detail::SaturatedFit>(&fit)) {
      Eigen::VectorXd out(d.n());
      std::vector<double> key(d.p());
      for (int i = 0; i < d.n(); ++i) {
        for (int j = 0; j < d.p(); ++j) key[j] = d.X(i, j);
        auto it = s->cell_mean.find(key);
        out[i] = it == s->cell_mean.end() ? s->global_mean : it->second;
      }
      return out;
    }
    if (const auto* k = std::get_if<detail::KnnFit>(&fit)) {
      Eigen::VectorXd out(d.n());
      const int ntrain = static_cast<int>(k->X.rows());
      const int kk = std::min(k->k, ntrain);
      std::vector<std::pair<double, int>> dist(ntrain);
      for (int i = 0; i < d.n(); ++i) {
        for (int j = 0; j < ntrain; ++j)
          dist[j] = {(k->X.row(j) - d.X.row(i)).squaredNorm(), j};
        // ties broken by lowest training row index
        std::partial_sort(dist.begin(), dist.begin() + kk, dist.end());
        double num = 0.0, den = 0.0;
        for (int j = 0; j < kk; ++j) {
          const double wj = k->w[dist[j].second];
          num += wj * k->y[dist[j].second];
          den += wj;
        }
        out[i] = den > 0 ? num / den : k->y.mean();
      }
      return out;
    }
    const auto& tr = std::get<detail::TreeFit>(fit);
    Eigen::VectorXd out(d.n());
    for (int i = 0; i < d.n(); ++i) {
      int node = 0;
      while (tr.nodes[node].feature >= 0) {
        node = d.X(i, tr.nodes[node].feature) <= tr.nodes[node].threshold
                   ? tr.nodes[node].left
                   : tr.nodes[node].right;
      }
      out[i] = tr.nodes[node].value;
    }
    return out;
  }
};

namespace detail {

inline void check_finite(const DesignMatrix& d, const Eigen::VectorXd& y,
                         const Eigen::VectorXd& w) {
  if (!d.X.allFinite() || !y.allFinite() || !w.allFinite())
    throw numeric_error("non-finite values passed to fit_learner");
  if (w.minCoeff() < 0.0) throw numeric_error("negative weights passed to fit_learner");
}

inline Eigen::VectorXd solve_wls(const DesignMatrix& d, const Eigen::VectorXd& z,
                                 const Eigen::VectorXd& w, double ridge,
                                 bool* fallback_used) {
  const int n = d.n();
  const int p = d.p() + 1;
  Eigen::MatrixXd Xi(n, p);
  Xi.col(0).setOnes();
  Xi.rightCols(d.p()) = d.X;
  Eigen::MatrixXd A = Xi.transpose() * w.asDiagonal() * Xi;
  Eigen::VectorXd b = Xi.transpose() * (w.array() * z.array()).matrix();
  if (ridge > 0.0) A.diagonal().tail(p - 1).array() += ridge;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
  Eigen::VectorXd beta = ldlt.solve(b);
  const double resid = (A * beta - b).norm();
  const double scale = std::max(1.0, b.norm());
  // a consistent singular system still solves with a tiny residual, so also
  // check the pivot spread for rank deficiency
  const Eigen::VectorXd dpiv = ldlt.vectorD().cwiseAbs();
  const bool rank_deficient = dpiv.minCoeff() <= 1e-12 * std::max(1.0, dpiv.maxCoeff());
  if (ldlt.info() != Eigen::Success || !beta.allFinite() || resid > 1e-6 * scale ||
      rank_deficient) {
    // singular design: retry with a small ridge
    Eigen::MatrixXd Ar = A;
    Ar.diagonal().array() += 1e-6;
    beta = Eigen::LDLT<Eigen::MatrixXd>(Ar).solve(b);
    if (fallback_used) *fallback_used = true;
    if (!beta.allFinite()) throw numeric_error("weighted least squares failed");
  }
  return beta;
}

inline GlmFit fit_gaussian(const DesignMatrix& d, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& w, double ridge, bool* fallback) {
  GlmFit g;
  g.binomial = false;
  g.coef = solve_wls(d, y, w, ridge, fallback);
  return g;
}

inline GlmFit fit_binomial(const DesignMatrix& d, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& w, double ridge, bool* fallback) {
  const int n = d.n();
  for (int i = 0; i < n; ++i)
    if (y[i] < 0.0 || y[i] > 1.0)
      throw numeric_error("binomial targets must lie in [0,1]");
  GlmFit g;
  g.binomial = true;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d.p() + 1);
  // start the intercept at the weighted mean logit
  const double wsum = w.sum();
  if (wsum > 0) beta[0] = logit(clip_prob((w.array() * y.array()).sum() / wsum));
  Eigen::MatrixXd Xi(n, d.p() + 1);
  Xi.col(0).setOnes();
  Xi.rightCols(d.p()) = d.X;
  const double grad_tol = 1e-8 * std::max(1.0, wsum);
  for (int iter = 0; iter < 100; ++iter) {
    Eigen::VectorXd eta = Xi * beta;
    Eigen::VectorXd p(n), wk(n), z(n);
    for (int i = 0; i < n; ++i) {
      p[i] = expit(eta[i]);
      const double v = std::max(p[i] * (1.0 - p[i]), 1e-10);
      wk[i] = w[i] * v;
      z[i] = eta[i] + (y[i] - p[i]) / v;
    }
    const Eigen::VectorXd grad = Xi.transpose() * (w.array() * (y - p).array()).matrix();
    if (grad.lpNorm<Eigen::Infinity>() <= grad_tol) break;
    DesignMatrix dd{d.X, d.names};
    Eigen::VectorXd next = solve_wls(dd, z, wk, ridge, fallback);
    if (!next.allFinite()) break;
    // cap runaway linear predictors under separation
    for (int j = 0; j < next.size(); ++j) next[j] = clip(next[j], -30.0, 30.0);
    if ((next - beta).lpNorm<Eigen::Infinity>() < 1e-12) { beta = next; break; }
    beta = next;
  }
  g.coef = beta;
  return g;
}

inline SaturatedFit fit_saturated(const DesignMatrix& d, const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& w, bool binomial) {
  SaturatedFit s;
  s.binomial = binomial;
  std::map<std::vector<double>, std::pair<double, double>> acc;  // key -> (sum wy, sum w)
  std::vector<double> key(d.p());
  double num = 0.0, den = 0.0;
  for (int i = 0; i < d.n(); ++i) {
    for (int j = 0; j < d.p(); ++j) key[j] = d.X(i, j);
    auto& a = acc[key];
    a.first += w[i] * y[i];
    a.second += w[i];
    num += w[i] * y[i];
    den += w[i];
  }
  s.global_mean = den > 0 ? num / den : 0.0;
  for (auto& [k, a] : acc)
    s.cell_mean[k] = a.second > 0 ? a.first / a.second : s.global_mean;
  return s;
}

inline TreeFit fit_tree(const DesignMatrix& d, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& w, int max_depth, int min_leaf) {
  TreeFit t;
  struct Job { std::vector<int> rows; int depth; int node; };
  auto leaf_value = [&](const std::vector<int>& rows) {
    double num = 0.0, den = 0.0;
    for (int i : rows) { num += w[i] * y[i]; den += w[i]; }
    return den > 0 ? num / den : 0.0;
  };
  std::vector<Job> stack;
  t.nodes.push_back({});
  {
    std::vector<int> all(d.n());
    std::iota(all.begin(), all.end(), 0);
    stack.push_back({std::move(all), 0, 0});
  }
  while (!stack.empty()) {
    Job job = std::move(stack.back());
    stack.pop_back();
    TreeNode& node = t.nodes[job.node];
    node.value = leaf_value(job.rows);
    if (job.depth >= max_depth || static_cast<int>(job.rows.size()) < 2 * min_leaf) continue;
    // exhaustive search over features and split points
    double best_gain = 1e-12;
    int best_f = -1;
    double best_thr = 0.0;
    double tot_w = 0.0, tot_wy = 0.0, tot_wyy = 0.0;
    for (int i : job.rows) { tot_w += w[i]; tot_wy += w[i] * y[i]; tot_wyy += w[i] * y[i] * y[i]; }
    const double base_sse = tot_wyy - (tot_w > 0 ? tot_wy * tot_wy / tot_w : 0.0);
    for (int f = 0; f < d.p(); ++f) {
      std::vector<int> order = job.rows;
      std::sort(order.begin(), order.end(), [&](int a, int b) { return d.X(a, f) < d.X(b, f); });
      double lw = 0.0, lwy = 0.0, lwyy = 0.0;
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        const int r = order[i];
        lw += w[r]; lwy += w[r] * y[r]; lwyy += w[r] * y[r] * y[r];
        if (d.X(order[i], f) == d.X(order[i + 1], f)) continue;
        const std::size_t nl = i + 1, nr = order.size() - nl;
        if (nl < static_cast<std::size_t>(min_leaf) || nr < static_cast<std::size_t>(min_leaf)) continue;
        const double rw = tot_w - lw, rwy = tot_wy - lwy, rwyy = tot_wyy - lwyy;
        const double sse = (lwyy - (lw > 0 ? lwy * lwy / lw : 0.0)) +
                           (rwyy - (rw > 0 ? rwy * rwy / rw : 0.0));
        const double gain = base_sse - sse;
        if (gain > best_gain) {
          best_gain = gain;
          best_f = f;
          best_thr = 0.5 * (d.X(order[i], f) + d.X(order[i + 1], f));
        }
      }
    }
    if (best_f < 0) continue;
    std::vector<int> left, right;
    for (int i : job.rows)
      (d.X(i, best_f) <= best_thr ? left : right).push_back(i);
    // grow the node pool before taking a reference: push_back invalidates it
    const int li = static_cast<int>(t.nodes.size());
    const int ri = li + 1;
    t.nodes.push_back({});
    t.nodes.push_back({});
    TreeNode& split = t.nodes[job.node];
    split.feature = best_f;
    split.threshold = best_thr;
    split.left = li;
    split.right = ri;
    stack.push_back({std::move(left), job.depth + 1, li});
    stack.push_back({std::move(right), job.depth + 1, ri});
  }
  return t;
}

}  // namespace detail

inline FittedModel fit_learner(const LearnerSpec& spec, const DesignMatrix& full,
                               const Eigen::VectorXd& y,
                               const Eigen::VectorXd& weights = Eigen::VectorXd()) {
  spec.check();
  const DesignMatrix d = full.select(spec.features);
  Eigen::VectorXd w = weights.size() ? weights : Eigen::VectorXd::Ones(d.n());
  if (d.n() != y.size() || d.n() != w.size())
    throw data_error("fit_learner: row/target/weight length mismatch");
  if (d.n() == 0) throw data_error("fit_learner: empty training set");
  detail::check_finite(d, y, w);
  FittedModel m;
  m.spec = spec;
  m.signature = d.names;
  switch (spec.family) {
    case Family::GaussianGlm:
      if (spec.saturated) m.fit = detail::fit_saturated(d, y, w, false);
      else m.fit = detail::fit_gaussian(d, y, w, spec.ridge, &m.ridge_fallback);
      break;
    case Family::BinomialGlm:
      for (int i = 0; i < y.size(); ++i)
        if (y[i] < 0.0 || y[i] > 1.0)
          throw numeric_error("binomial targets must lie in [0,1]");
      if (spec.saturated) m.fit = detail::fit_saturated(d, y, w, true);
      else m.fit = detail::fit_binomial(d, y, w, spec.ridge, &m.ridge_fallback);
      break;
    case Family::Knn: {
      detail::KnnFit k;
      k.X = d.X;
      k.y = y;
      k.w = w;
      k.k = spec.k;
      m.fit = std::move(k);
      break;
    }
    case Family::Tree:
      m.fit = detail::fit_tree(d, y, w, spec.max_depth, spec.min_leaf);
      break;
  }
  return m;
}

// ---------------------------------------------------------------------------
// folds

struct FoldAssignment {
  int k = 0;
  std::uint64_t seed = 0;
  std::vector<int> fold;  // per unit

  std::vector<int> units_in(int j) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < fold.size(); ++i)
      if (fold[i] == j) out.push_back(static_cast<int>(i));
    return out;
  }
  std::vector<int> units_not_in(int j) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < fold.size(); ++i)
      if (fold[i] != j) out.push_back(static_cast<int>(i));
    return out;
  }
};

inline FoldAssignment make_folds(int n, int k, std::uint64_t seed) {
  if (k < 2) throw config_error("make_folds: need k >= 2");
  if (k > n) throw config_error("make_folds: k exceeds n");
  FoldAssignment f;
  f.k = k;
  f.seed = seed;
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(counter_uniform(seed, 0xf01d5, i) * (i + 1));
    std::swap(perm[i], perm[std::min(j, i)]);
  }
  f.fold.resize(n);
  for (int i = 0; i < n; ++i) f.fold[perm[i]] = i % k;
  return f;
}

// ---------------------------------------------------------------------------
// superlearner stack

enum class StackLoss { Squared, Log };

struct StackWeights {
  Eigen::VectorXd w;              // simplex weights, one per learner
  std::vector<double> cv_risk;    // cross-validated loss per learner
};

struct EnsembleModel {
  std::vector<FittedModel> models;  // full-data refits
  StackWeights weights;

  Eigen::VectorXd predict(const DesignMatrix& d) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(d.n());
    for (std::size_t j = 0; j < models.size(); ++j) {
      if (weights.w[static_cast<Eigen::Index>(j)] == 0.0) continue;
      out += weights.w[static_cast<Eigen::Index>(j)] * models[j].predict(d);
    }
    return out;
  }
};

namespace detail {

inline double stack_loss(StackLoss loss, const Eigen::VectorXd& pred,
                         const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
  double total = 0.0, wsum = 0.0;
  for (int i = 0; i < y.size(); ++i) {
    const double p = loss == StackLoss::Log ? clip_prob(pred[i]) : pred[i];
    if (loss == StackLoss::Squared) total += w[i] * (y[i] - p) * (y[i] - p);
    else total -= w[i] * (y[i] * std::log(p) + (1.0 - y[i]) * std::log(1.0 - p));
    wsum += w[i];
  }
  return wsum > 0 ? total / wsum : 0.0;
}

// Euclidean projection onto the probability simplex (Duchi et al.).
inline Eigen::VectorXd project_simplex(Eigen::VectorXd v) {
  const int m = static_cast<int>(v.size());
  std::vector<double> u(v.data(), v.data() + m);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0, theta = 0.0;
  int rho = 0;
  for (int i = 0; i < m; ++i) {
    css += u[i];
    const double t = (css - 1.0) / (i + 1);
    if (u[i] - t > 0) { rho = i + 1; theta = t; }
  }
  for (int i = 0; i < m; ++i) v[i] = std::max(v[i] - theta, 0.0);
  const double s = v.sum();
  if (s > 0) v /= s;  // exact simplex constraint
  else v.setConstant(1.0 / m);
  return v;
}

}  // namespace detail

inline std::pair<StackWeights, EnsembleModel> stack_superlearner(
    const std::vector<LearnerSpec>& specs, const DesignMatrix& d, const Eigen::VectorXd& y,
    int k_folds, StackLoss loss, std::uint64_t seed,
    const Eigen::VectorXd& weights = Eigen::VectorXd()) {
  if (specs.empty()) throw config_error("stack_superlearner: no learners");
  const int n = d.n();
  Eigen::VectorXd w = weights.size() ? weights : Eigen::VectorXd::Ones(n);
  const int m = static_cast<int>(specs.size());

  StackWeights sw;
  sw.w = Eigen::VectorXd::Zero(m);
  sw.cv_risk.assign(m, kNaN);

  if (m == 1) {
    sw.w[0] = 1.0;
    EnsembleModel ens;
    ens.models.push_back(fit_learner(specs[0], d, y, w));
    ens.weights = sw;
    return {sw, ens};
  }

  // cross-validated prediction matrix
  const FoldAssignment folds = make_folds(n, std::min(k_folds, n), seed);
  Eigen::MatrixXd P(n, m);
  int fitted = 0;
  std::vector<bool> ok(m, true);
  for (int j = 0; j < m; ++j) {
    try {
      for (int f = 0; f < folds.k; ++f) {
        const auto train = folds.units_not_in(f);
        const auto test = folds.units_in(f);
        Eigen::VectorXd yt(train.size()), wt(train.size());
        for (std::size_t i = 0; i < train.size(); ++i) { yt[i] = y[train[i]]; wt[i] = w[train[i]]; }
        const FittedModel mod = fit_learner(specs[j], d.rows(train), yt, wt);
        const Eigen::VectorXd pred = mod.predict(d.rows(test));
        for (std::size_t i = 0; i < test.size(); ++i) P(test[i], j) = pred[i];
      }
      ++fitted;
    } catch (const error&) {
      ok[j] = false;
      P.col(j).setZero();
    }
  }
  if (fitted == 0) throw numeric_error("stack_superlearner: every learner failed to fit");

  for (int j = 0; j < m; ++j)
    if (ok[j]) sw.cv_risk[j] = detail::stack_loss(loss, P.col(j), y, w);

  // minimize the convex-combination CV loss over the simplex by projected
  // gradient, then compare with the best single-learner vertex
  Eigen::VectorXd wv = Eigen::VectorXd::Constant(m, 1.0 / m);
  for (int j = 0; j < m; ++j)
    if (!ok[j]) wv[j] = 0.0;
  wv = detail::project_simplex(wv);
  const double lip = std::max(1.0, (P.transpose() * P).norm() / n);
  const double step = 1.0 / lip;
  for (int iter = 0; iter < 2000; ++iter) {
    const Eigen::VectorXd pred = P * wv;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(m);
    double wsum = 0.0;
    for (int i = 0; i < n; ++i) {
      wsum += w[i];
      if (loss == StackLoss::Squared) {
        grad += w[i] * 2.0 * (pred[i] - y[i]) * P.row(i).transpose();
      } else {
        const double p = clip_prob(pred[i]);
        grad += w[i] * ((p - y[i]) / (p * (1.0 - p))) * P.row(i).transpose();
      }
    }
    grad /= std::max(wsum, 1.0);
    Eigen::VectorXd next = detail::project_simplex(wv - step * grad);
    // re-projecting would leak mass back onto failed learners; renormalize
    // over the survivors instead
    for (int j = 0; j < m; ++j)
      if (!ok[j]) next[j] = 0.0;
    const double s = next.sum();
    if (s > 0.0) {
      next /= s;
    } else {
      for (int j = 0; j < m; ++j) next[j] = ok[j] ? 1.0 / fitted : 0.0;
    }
    if ((next - wv).lpNorm<Eigen::Infinity>() < 1e-12) { wv = next; break; }
    wv = next;
  }
  // the optimizer may only improve on the best vertex
  int best = -1;
  for (int j = 0; j < m; ++j)
    if (ok[j] && (best < 0 || sw.cv_risk[j] < sw.cv_risk[best])) best = j;
  const double combo_loss = detail::stack_loss(loss, P * wv, y, w);
  if (best >= 0 && sw.cv_risk[best] < combo_loss) {
    wv.setZero();
    wv[best] = 1.0;
  }
  sw.w = wv;

  EnsembleModel ens;
  ens.weights = sw;
  for (int j = 0; j < m; ++j) {
    if (ok[j] && wv[j] > 0.0) {
      ens.models.push_back(fit_learner(specs[j], d, y, w));
    } else {
      FittedModel placeholder;  // zero-weight slot, never evaluated
      placeholder.spec = specs[j];
      placeholder.fit = detail::SaturatedFit{};
      ens.models.push_back(std::move(placeholder));
    }
  }
  return {sw, ens};
}

// Fit a learner stack (single learner bypasses CV weighting).
inline EnsembleModel fit_stack(const std::vector<LearnerSpec>& specs, const DesignMatrix& d,
                               const Eigen::VectorXd& y, int cv_folds, StackLoss loss,
                               std::uint64_t seed,
                               const Eigen::VectorXd& w = Eigen::VectorXd()) {
  return stack_superlearner(specs, d, y, cv_folds, loss, seed, w).second;
}

}  // namespace lmtp
