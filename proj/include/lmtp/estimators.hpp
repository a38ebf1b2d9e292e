// Estimators of psi = E[Y(d)]: g-computation, IPW, TMLE, and SDR, with
// influence-based uncertainty, contrasts, and survival curves.
//
// All four share the same backward sequential regression: starting from the
// outcome, fit Q_t on the time-(t+1) pseudo-outcome over observed at-risk
// rows, evaluate at the policy-shifted exposure, and recurse. TMLE adds a
// weighted intercept-only logistic fluctuation per time step; SDR replaces the
// regression target with a doubly robust pseudo-outcome.
#pragma once

#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "lmtp/density_ratio.hpp"
#include "lmtp/design.hpp"
#include "lmtp/learners.hpp"
#include "lmtp/panel.hpp"
#include "lmtp/policy.hpp"

namespace lmtp {

enum class EstimatorKind { GComp, Ipw, Tmle, Sdr };

inline std::string estimator_name(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::GComp: return "gcomp";
    case EstimatorKind::Ipw: return "ipw";
    case EstimatorKind::Tmle: return "tmle";
    case EstimatorKind::Sdr: return "sdr";
  }
  return "?";
}

inline EstimatorKind parse_estimator(const std::string& s) {
  if (s == "gcomp" || s == "g-comp") return EstimatorKind::GComp;
  if (s == "ipw") return EstimatorKind::Ipw;
  if (s == "tmle") return EstimatorKind::Tmle;
  if (s == "sdr") return EstimatorKind::Sdr;
  throw config_error("unknown estimator: " + s);
}

struct NuisanceConfig {
  std::vector<LearnerSpec> outcome_learners{LearnerSpec{}};
  std::vector<LearnerSpec> ratio_learners{LearnerSpec{Family::BinomialGlm}};
  int cross_fit_folds = 5;  // 1 = no cross-fitting
  int cv_folds = 5;         // superlearner CV
  double truncation_quantile = 1.0;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  // optional per-time feature restrictions (misspecification scenarios)
  std::vector<std::vector<std::string>> outcome_features;
  std::vector<std::vector<std::string>> ratio_features;

  std::vector<std::string> outcome_allow(int t) const {
    if (outcome_features.empty()) return {};
    return outcome_features[std::min<std::size_t>(t, outcome_features.size() - 1)];
  }
  std::vector<std::string> ratio_allow(int t) const {
    if (ratio_features.empty()) return {};
    return ratio_features[std::min<std::size_t>(t, ratio_features.size() - 1)];
  }
};

struct Estimate {
  std::string estimator;
  double psi = kNaN;
  double se = kNaN;
  double ci_low = kNaN, ci_high = kNaN;
  double alpha = 0.05;
  std::vector<double> influence;  // empty for g-comp/IPW unless bootstrapped
  bool degenerate = false;
  double outcome_min = 0.0, outcome_max = 1.0;
  double truncation_quantile = 1.0;
  int folds = 1;
  std::string note;

  void finalize_ci() {
    if (!std::isnan(se)) {
      const double z = z_for_alpha(alpha);
      ci_low = psi - z * se;
      ci_high = psi + z * se;
    }
  }
  bool covers(double truth) const { return truth >= ci_low && truth <= ci_high; }
};

namespace detail {

inline StackLoss loss_for(const std::vector<LearnerSpec>& specs) {
  for (const auto& s : specs)
    if (s.family != Family::BinomialGlm) return StackLoss::Squared;
  return StackLoss::Log;
}

// Target horizon H: recursion runs over times 0..H-1 and the outcome is Y
// (non-survival, H = tau+1) or Y_{H-1} (survival).
inline int default_horizon(const PanelDataset& data) { return data.horizon() + 1; }

inline void check_horizon(const PanelDataset& data, int h) {
  if (h < 1 || h > data.horizon() + 1) throw config_error("horizon out of range");
  if (!data.is_survival() && h != data.horizon() + 1)
    throw config_error("non-survival outcomes support only the full horizon");
}

// Terminal targets at horizon H: NaN where unobserved.
inline std::vector<double> terminal_targets(const PanelDataset& data, int h) {
  std::vector<double> y(data.n_units(), kNaN);
  for (int u = 0; u < data.n_units(); ++u) {
    if (data.is_survival()) {
      if (data.event_by(u, h - 1)) { y[u] = 1.0; continue; }
      if (!data.observed_through(u, h)) continue;  // censored before horizon
      y[u] = data.outcome_at_horizon(u, h);
    } else {
      if (!data.observed_through(u, data.horizon() + 1)) continue;
      const double v = data.outcome_at_horizon(u, h);
      if (!is_missing(v)) y[u] = v;
    }
  }
  return y;
}

struct OutcomeTimeFit {
  std::vector<double> pred_obs;    // per unit at (A_t, H_t); NaN off risk set
  std::vector<double> pred_shift;  // per unit at (A_t^d, H_t)
};

// Cross-fitted regression of `target` (NaN = ineligible row) on (H_t, A_t),
// evaluated at both the observed and the shifted exposure for every at-risk
// unit. Predictions for a unit never come from a model trained on its fold.
inline OutcomeTimeFit fit_outcome_time(const PanelDataset& data, int t,
                                       const std::vector<double>& target,
                                       const std::vector<double>& shifted_t,
                                       const std::vector<LearnerSpec>& specs,
                                       const FoldAssignment& folds, int cv_folds,
                                       std::uint64_t seed,
                                       const std::vector<std::string>& allow) {
  const int n = data.n_units();
  OutcomeTimeFit out;
  out.pred_obs.assign(n, kNaN);
  out.pred_shift.assign(n, kNaN);
  DesignMatrix d_obs = history_design(data, t);
  DesignMatrix d_shift = history_design(data, t, &shifted_t);
  if (!allow.empty()) {
    d_obs = d_obs.select(allow);
    d_shift = d_shift.select(allow);
  }
  const auto risk = at_risk_units(data, t);
  std::vector<int> eligible;
  for (int u : risk)
    if (!is_missing(target[u])) eligible.push_back(u);
  if (eligible.empty())
    throw numeric_error("empty uncensored risk set at time " + std::to_string(t));

  const StackLoss loss = loss_for(specs);
  auto run = [&](const std::vector<int>& train, const std::vector<int>& eval) {
    Eigen::VectorXd y(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) y[i] = target[train[i]];
    const EnsembleModel model =
        fit_stack(specs, d_obs.rows(train), y, cv_folds, loss, seed);
    const Eigen::VectorXd po = model.predict(d_obs.rows(eval));
    const Eigen::VectorXd ps = model.predict(d_shift.rows(eval));
    for (std::size_t i = 0; i < eval.size(); ++i) {
      out.pred_obs[eval[i]] = po[i];
      out.pred_shift[eval[i]] = ps[i];
    }
  };

  if (folds.k <= 1) {
    run(eligible, risk);
  } else {
    for (int f = 0; f < folds.k; ++f) {
      std::vector<int> train, eval;
      for (int u : eligible)
        if (folds.fold[u] != f) train.push_back(u);
      for (int u : risk)
        if (folds.fold[u] == f) eval.push_back(u);
      if (eval.empty()) continue;
      if (train.empty()) train = eligible;
      run(train, eval);
    }
  }
  return out;
}

inline Estimate degenerate_estimate(EstimatorKind kind, const PanelDataset& data, int h,
                                    double value, double alpha) {
  Estimate e;
  e.estimator = estimator_name(kind);
  e.psi = value;
  e.se = 0.0;
  e.alpha = alpha;
  e.degenerate = true;
  e.outcome_min = data.outcome_min();
  e.outcome_max = data.outcome_max();
  e.influence.assign(data.n_units(), 0.0);
  e.note = "degenerate outcome: all observed values equal";
  e.finalize_ci();
  return e;
}

// All observed terminal outcomes equal?
inline bool outcome_degenerate(const std::vector<double>& y, double* value) {
  bool seen = false;
  double v = 0.0;
  for (double x : y) {
    if (is_missing(x)) continue;
    if (!seen) { v = x; seen = true; }
    else if (x != v) return false;
  }
  if (seen && value) *value = v;
  return seen;
}

}  // namespace detail

inline FoldAssignment cross_fit_folds(const PanelDataset& data, const NuisanceConfig& cfg) {
  if (cfg.cross_fit_folds <= 1) {
    FoldAssignment f;
    f.k = 1;
    f.fold.assign(data.n_units(), 0);
    return f;
  }
  return make_folds(data.n_units(), cfg.cross_fit_folds, cfg.seed);
}

// Full ratio pipeline: per-time classification fits, censoring model, optional
// truncation. Censoring probabilities share the exposure-ratio folds.
inline RatioEstimates estimate_ratios(const PanelDataset& data, const Policy& policy,
                                      const NuisanceConfig& cfg) {
  const FoldAssignment folds = cross_fit_folds(data, cfg);
  const bool cfh = policy.category() == PolicyCategory::Mtp;
  std::vector<std::vector<double>> r;
  for (int t = 0; t <= data.horizon(); ++t)
    r.push_back(fit_ratio(data, policy, t, cfg.ratio_learners, folds, cfh, cfg.cv_folds,
                          mix_key(cfg.seed, 0x4a7e0, t), cfg.ratio_allow(t)));
  const auto pc = fit_censoring_probs(data, cfg.ratio_learners, folds, cfg.cv_folds,
                                      mix_key(cfg.seed, 0xce4511));
  RatioEstimates est = cumulate_ratios(data, std::move(r), pc);
  est.folds = folds.k;
  if (cfg.truncation_quantile < 1.0)
    est = truncate_ratios(std::move(est), cfg.truncation_quantile);
  return est;
}

// ---------------------------------------------------------------------------
// g-computation

inline Estimate estimate_gcomp(const PanelDataset& data, const Policy& policy,
                               const NuisanceConfig& cfg, int horizon = -1) {
  const int h = horizon < 0 ? detail::default_horizon(data) : horizon;
  detail::check_horizon(data, h);
  const int n = data.n_units();
  std::vector<double> pseudo = detail::terminal_targets(data, h);
  double deg_value;
  if (detail::outcome_degenerate(pseudo, &deg_value))
    return detail::degenerate_estimate(EstimatorKind::GComp, data, h, deg_value, cfg.alpha);

  const FoldAssignment folds = cross_fit_folds(data, cfg);
  const auto shifted = shifted_exposures(data, policy, policy.category() == PolicyCategory::Mtp);
  for (int t = h - 1; t >= 0; --t) {
    const auto fit = detail::fit_outcome_time(data, t, pseudo, shifted[t],
                                              cfg.outcome_learners, folds, cfg.cv_folds,
                                              mix_key(cfg.seed, 0x9c0, t),
                                              cfg.outcome_allow(t));
    std::vector<double> next(n, kNaN);
    for (int u = 0; u < n; ++u) {
      if (data.is_survival() && data.event_by(u, t - 1)) next[u] = 1.0;
      else if (!is_missing(fit.pred_shift[u])) next[u] = fit.pred_shift[u];
    }
    pseudo = std::move(next);
  }
  Estimate e;
  e.estimator = estimator_name(EstimatorKind::GComp);
  std::vector<double> vals;
  for (double v : pseudo)
    if (!is_missing(v)) vals.push_back(v);
  if (vals.empty()) throw numeric_error("g-computation produced no time-0 pseudo-outcomes");
  e.psi = mean_of(vals);
  e.alpha = cfg.alpha;
  e.outcome_min = data.outcome_min();
  e.outcome_max = data.outcome_max();
  e.folds = folds.k;
  return e;
}

// ---------------------------------------------------------------------------
// IPW

inline Estimate estimate_ipw(const PanelDataset& data, const Policy& policy,
                             const RatioEstimates& ratios, double alpha = 0.05,
                             int horizon = -1) {
  const int h = horizon < 0 ? detail::default_horizon(data) : horizon;
  detail::check_horizon(data, h);
  if (ratios.horizon() < h - 1) throw data_error("ratios missing a time point");
  const std::vector<double> y = detail::terminal_targets(data, h);
  const int n = data.n_units();
  std::vector<double> terms(n, 0.0);
  for (int u = 0; u < n; ++u) {
    const double w = ratios.weight[h - 1][u];
    if (w == 0.0) continue;  // censored before the horizon
    if (is_missing(y[u]))
      throw numeric_error("IPW: outcome unavailable for a positively weighted unit");
    terms[u] = w * y[u];
  }
  Estimate e;
  e.estimator = estimator_name(EstimatorKind::Ipw);
  e.psi = mean_of(terms);
  e.alpha = alpha;
  e.outcome_min = data.outcome_min();
  e.outcome_max = data.outcome_max();
  e.truncation_quantile = ratios.truncation_quantile;
  e.folds = ratios.folds;
  return e;
}

// ---------------------------------------------------------------------------
// TMLE

inline Estimate estimate_tmle(const PanelDataset& data, const Policy& policy,
                              const NuisanceConfig& cfg, const RatioEstimates& ratios,
                              int horizon = -1) {
  const int h = horizon < 0 ? detail::default_horizon(data) : horizon;
  detail::check_horizon(data, h);
  const int n = data.n_units();
  std::vector<double> raw = detail::terminal_targets(data, h);
  double deg_value;
  if (detail::outcome_degenerate(raw, &deg_value))
    return detail::degenerate_estimate(EstimatorKind::Tmle, data, h, deg_value, cfg.alpha);

  // outcome scaled to [0,1] with the recorded range
  const double ymin = data.outcome_min();
  const double ymax = data.outcome_max();
  const double span = ymax - ymin;
  std::vector<double> pseudo(n, kNaN);
  for (int u = 0; u < n; ++u)
    if (!is_missing(raw[u])) pseudo[u] = span > 0 ? (raw[u] - ymin) / span : 0.0;

  const FoldAssignment folds = cross_fit_folds(data, cfg);
  const auto shifted = shifted_exposures(data, policy, policy.category() == PolicyCategory::Mtp);
  std::vector<double> influence(n, 0.0);

  for (int t = h - 1; t >= 0; --t) {
    const auto fit = detail::fit_outcome_time(data, t, pseudo, shifted[t],
                                              cfg.outcome_learners, folds, cfg.cv_folds,
                                              mix_key(cfg.seed, 0x731e, t),
                                              cfg.outcome_allow(t));
    // intercept-only logistic fluctuation of logit(Q_t) on observed rows,
    // weighted by the cumulative density ratio w_t, targeting pseudo_{t+1}
    std::vector<int> rows;
    for (int u : at_risk_units(data, t))
      if (!is_missing(pseudo[u]) && !is_missing(fit.pred_obs[u])) rows.push_back(u);
    double eps = 0.0;
    {
      double wtot = 0.0;
      for (int u : rows) wtot += ratios.weight[t][u];
      if (wtot > 0.0) {
        bool converged = false;
        for (int iter = 0; iter < 50; ++iter) {
          double score = 0.0, info = 0.0;
          for (int u : rows) {
            const double w = ratios.weight[t][u];
            if (w == 0.0) continue;
            const double q = expit(logit(clip_prob(fit.pred_obs[u])) + eps);
            score += w * (pseudo[u] - q);
            info += w * q * (1.0 - q);
          }
          if (std::abs(score) <= 1e-10 * std::max(1.0, wtot)) { converged = true; break; }
          if (info <= 0.0) break;
          eps += clip(score / info, -5.0, 5.0);
        }
        if (!converged) {
          double score = 0.0;
          for (int u : rows) {
            const double w = ratios.weight[t][u];
            const double q = expit(logit(clip_prob(fit.pred_obs[u])) + eps);
            score += w * (pseudo[u] - q);
          }
          if (std::abs(score) > 1e-6 * std::max(1.0, wtot))
            throw numeric_error("TMLE fluctuation did not converge at time " +
                                std::to_string(t) + " (score " + std::to_string(score) + ")");
        }
      }
    }
    // influence residual terms at the targeted fit, then step the recursion
    std::vector<double> next(n, kNaN);
    for (int u = 0; u < n; ++u) {
      if (data.is_survival() && data.event_by(u, t - 1)) { next[u] = 1.0; continue; }
      if (is_missing(fit.pred_shift[u])) continue;
      const double q_shift = expit(logit(clip_prob(fit.pred_shift[u])) + eps);
      next[u] = q_shift;
      if (!is_missing(pseudo[u]) && ratios.weight[t][u] > 0.0) {
        const double q_obs = expit(logit(clip_prob(fit.pred_obs[u])) + eps);
        influence[u] += ratios.weight[t][u] * (pseudo[u] - q_obs);
      }
    }
    pseudo = std::move(next);
  }

  Estimate e;
  e.estimator = estimator_name(EstimatorKind::Tmle);
  std::vector<double> vals;
  for (int u = 0; u < n; ++u) {
    const double v = is_missing(pseudo[u]) ? 0.0 : pseudo[u];
    vals.push_back(v);
    influence[u] += v;
  }
  const double psi_scaled = mean_of(vals);
  for (int u = 0; u < n; ++u) influence[u] = span > 0 ? span * (influence[u] - psi_scaled)
                                                      : influence[u] - psi_scaled;
  e.psi = span > 0 ? ymin + span * psi_scaled : ymin;
  e.influence = std::move(influence);
  e.se = sd_of(e.influence) / std::sqrt(static_cast<double>(n));
  e.alpha = cfg.alpha;
  e.outcome_min = ymin;
  e.outcome_max = ymax;
  e.truncation_quantile = ratios.truncation_quantile;
  e.folds = folds.k;
  e.finalize_ci();
  return e;
}

// ---------------------------------------------------------------------------
// SDR

inline Estimate estimate_sdr(const PanelDataset& data, const Policy& policy,
                             const NuisanceConfig& cfg, const RatioEstimates& ratios,
                             int horizon = -1) {
  const int h = horizon < 0 ? detail::default_horizon(data) : horizon;
  detail::check_horizon(data, h);
  const int n = data.n_units();
  std::vector<double> phi = detail::terminal_targets(data, h);  // phi_{t+1} during loop
  double deg_value;
  if (detail::outcome_degenerate(phi, &deg_value))
    return detail::degenerate_estimate(EstimatorKind::Sdr, data, h, deg_value, cfg.alpha);

  const FoldAssignment folds = cross_fit_folds(data, cfg);
  const auto shifted = shifted_exposures(data, policy, policy.category() == PolicyCategory::Mtp);

  // phi is unbounded, so the regressions use squared loss; binomial GLMs are
  // demoted to gaussian (saturated cell means are identical either way)
  std::vector<LearnerSpec> specs = cfg.outcome_learners;
  for (auto& s : specs)
    if (s.family == Family::BinomialGlm) s.family = Family::GaussianGlm;

  // backward recursion of the doubly robust pseudo-outcome
  //   phi_t = rho_t (phi_{t+1} - Q_t(A_t,H_t)) + Q_t(A_t^d,H_t)
  // applied through t = 0; psi is the plain mean of phi_0, whose expansion is
  // the estimating equation sum_t w_t (Q^d_{t+1} adjustments) + Q_0^d.
  for (int t = h - 1; t >= 0; --t) {
    const auto fit = detail::fit_outcome_time(data, t, phi, shifted[t],
                                              specs, folds, cfg.cv_folds,
                                              mix_key(cfg.seed, 0x5d7, t),
                                              cfg.outcome_allow(t));
    std::vector<double> next(n, kNaN);
    for (int u = 0; u < n; ++u) {
      if (data.is_survival() && data.event_by(u, t - 1)) { next[u] = 1.0; continue; }
      if (is_missing(fit.pred_shift[u])) continue;
      double v = fit.pred_shift[u];
      const double rho = ratios.factor(t, u);
      if (rho != 0.0 && !is_missing(phi[u]) && !is_missing(fit.pred_obs[u]))
        v += rho * (phi[u] - fit.pred_obs[u]);
      next[u] = v;
    }
    phi = std::move(next);
  }

  Estimate e;
  e.estimator = estimator_name(EstimatorKind::Sdr);
  for (int u = 0; u < n; ++u)
    if (is_missing(phi[u]))
      throw numeric_error("SDR produced no time-0 pseudo-outcome for unit " +
                          data.unit_ids()[u]);
  e.psi = mean_of(phi);
  e.influence.resize(n);
  for (int u = 0; u < n; ++u) e.influence[u] = phi[u] - e.psi;
  e.se = sd_of(e.influence) / std::sqrt(static_cast<double>(n));
  e.alpha = cfg.alpha;
  e.outcome_min = data.outcome_min();
  e.outcome_max = data.outcome_max();
  e.truncation_quantile = ratios.truncation_quantile;
  e.folds = folds.k;
  e.finalize_ci();
  return e;
}

// ---------------------------------------------------------------------------
// dispatch, bootstrap, contrasts

inline Estimate run_estimator(EstimatorKind kind, const PanelDataset& data,
                              const Policy& policy, const NuisanceConfig& cfg,
                              const RatioEstimates* ratios = nullptr, int horizon = -1) {
  switch (kind) {
    case EstimatorKind::GComp: return estimate_gcomp(data, policy, cfg, horizon);
    case EstimatorKind::Ipw: {
      if (ratios) return estimate_ipw(data, policy, *ratios, cfg.alpha, horizon);
      const RatioEstimates r = estimate_ratios(data, policy, cfg);
      return estimate_ipw(data, policy, r, cfg.alpha, horizon);
    }
    case EstimatorKind::Tmle: {
      if (ratios) return estimate_tmle(data, policy, cfg, *ratios, horizon);
      const RatioEstimates r = estimate_ratios(data, policy, cfg);
      return estimate_tmle(data, policy, cfg, r, horizon);
    }
    case EstimatorKind::Sdr: {
      if (ratios) return estimate_sdr(data, policy, cfg, *ratios, horizon);
      const RatioEstimates r = estimate_ratios(data, policy, cfg);
      return estimate_sdr(data, policy, cfg, r, horizon);
    }
  }
  throw config_error("unknown estimator kind");
}

// Nonparametric unit-level bootstrap for the parametric estimators. Refused
// for data-adaptive learner stacks: without a parametric model the bootstrap
// distribution of these estimators is not asymptotically normal and its
// standard errors are invalid.
inline Estimate bootstrap_se(EstimatorKind kind, const PanelDataset& data,
                             const Policy& policy, const NuisanceConfig& cfg, int b_reps,
                             std::uint64_t seed) {
  if (kind != EstimatorKind::GComp && kind != EstimatorKind::Ipw)
    throw config_error("bootstrap_se applies to gcomp and ipw only");
  for (const auto& s : cfg.outcome_learners)
    if (s.data_adaptive())
      throw validation_error("bootstrap refused: learner stack contains the data-adaptive " +
                             family_name(s.family) +
                             "; bootstrap standard errors require pre-specified parametric "
                             "regressions");
  for (const auto& s : cfg.ratio_learners)
    if (s.data_adaptive())
      throw validation_error("bootstrap refused: learner stack contains the data-adaptive " +
                             family_name(s.family) +
                             "; bootstrap standard errors require pre-specified parametric "
                             "regressions");
  if (b_reps < 1) throw config_error("bootstrap needs at least one replicate");

  Estimate point = run_estimator(kind, data, policy, cfg);
  const int n = data.n_units();
  std::vector<double> reps(b_reps);
  for (int b = 0; b < b_reps; ++b) {
    // resample units with replacement
    std::map<std::string, std::vector<double>> cols;
    std::vector<std::string> ids;
    std::vector<int> pick(n);
    for (int i = 0; i < n; ++i)
      pick[i] = static_cast<int>(counter_uniform(seed, 0xb001, b, i) * n);
    for (const auto& name : data.column_names()) {
      const auto& src = data.column(name);
      auto& dst = cols[name];
      dst.resize(n);
      for (int i = 0; i < n; ++i) dst[i] = src[pick[i]];
    }
    for (int i = 0; i < n; ++i) ids.push_back(std::to_string(i));
    const PanelDataset resampled =
        PanelDataset::from_columns(data.schema(), std::move(ids), std::move(cols));
    NuisanceConfig bcfg = cfg;
    bcfg.seed = mix_key(seed, 0xb007, b);
    reps[b] = run_estimator(kind, resampled, policy, bcfg).psi;
  }
  point.se = sd_of(reps);
  point.finalize_ci();
  // percentile CI recorded alongside the normal one
  std::vector<double> sorted = reps;
  std::sort(sorted.begin(), sorted.end());
  const double a2 = point.alpha / 2.0;
  auto pct = [&](double p) {
    const double pos = p * (sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const double fr = pos - lo;
    return lo + 1 < sorted.size() ? sorted[lo] * (1 - fr) + sorted[lo + 1] * fr : sorted[lo];
  };
  point.note = "bootstrap B=" + std::to_string(b_reps) + " percentile CI [" +
               std::to_string(pct(a2)) + ", " + std::to_string(pct(1.0 - a2)) + "]";
  if (b_reps == 1) point.note += "; warning: SE from a single replicate is 0";
  return point;
}

enum class ContrastType { Difference, Ratio };

inline Estimate contrast(const Estimate& a, const Estimate& b, ContrastType type) {
  if (a.influence.empty() || b.influence.empty())
    throw config_error("contrast requires influence values on both estimates");
  if (a.influence.size() != b.influence.size())
    throw config_error("contrast requires estimates computed on the same units");
  const int n = static_cast<int>(a.influence.size());
  Estimate e;
  e.alpha = a.alpha;
  e.influence.resize(n);
  if (type == ContrastType::Difference) {
    e.estimator = a.estimator + "-diff";
    e.psi = a.psi - b.psi;
    for (int i = 0; i < n; ++i) e.influence[i] = a.influence[i] - b.influence[i];
    e.se = sd_of(e.influence) / std::sqrt(static_cast<double>(n));
    e.finalize_ci();
  } else {
    e.estimator = a.estimator + "-ratio";
    if (a.psi == 0.0 || b.psi == 0.0) throw numeric_error("ratio contrast with a zero estimate");
    e.psi = a.psi / b.psi;
    // delta method on the log scale
    for (int i = 0; i < n; ++i)
      e.influence[i] = a.influence[i] / a.psi - b.influence[i] / b.psi;
    const double se_log = sd_of(e.influence) / std::sqrt(static_cast<double>(n));
    e.se = e.psi * se_log;
    const double z = z_for_alpha(e.alpha);
    e.ci_low = e.psi * std::exp(-z * se_log);
    e.ci_high = e.psi * std::exp(z * se_log);
  }
  return e;
}

// ---------------------------------------------------------------------------
// survival curves

struct SurvivalCurve {
  std::vector<Estimate> horizons;      // incidence at days 1..H (isotonized)
  std::vector<double> band_half_width; // simultaneous band per horizon
  double band_level = 0.95;
};

// Pool-adjacent-violators for a nondecreasing fit (uniform weights).
inline std::vector<double> isotonic_nondecreasing(std::vector<double> y) {
  const int n = static_cast<int>(y.size());
  std::vector<double> level(n), weight(n);
  std::vector<int> size(n);
  int m = 0;
  for (int i = 0; i < n; ++i) {
    level[m] = y[i];
    weight[m] = 1.0;
    size[m] = 1;
    ++m;
    while (m > 1 && level[m - 2] > level[m - 1]) {
      const double w = weight[m - 2] + weight[m - 1];
      level[m - 2] = (weight[m - 2] * level[m - 2] + weight[m - 1] * level[m - 1]) / w;
      weight[m - 2] = w;
      size[m - 2] += size[m - 1];
      --m;
    }
  }
  std::vector<double> out;
  for (int b = 0; b < m; ++b)
    out.insert(out.end(), size[b], level[b]);
  return out;
}

inline SurvivalCurve survival_curves(const PanelDataset& data, const Policy& policy,
                                     EstimatorKind kind, const NuisanceConfig& cfg,
                                     int band_replicates = 2000) {
  if (!data.is_survival() || !data.has_censoring())
    throw config_error("survival curves need survival outcome columns and a censoring column");
  if (kind != EstimatorKind::Tmle && kind != EstimatorKind::Sdr)
    throw config_error("survival bands require an influence-based estimator (tmle or sdr)");
  const int H = data.horizon() + 1;
  const int n = data.n_units();
  const RatioEstimates ratios = estimate_ratios(data, policy, cfg);

  SurvivalCurve curve;
  curve.band_level = 1.0 - cfg.alpha;
  std::vector<std::vector<double>> infl(H);
  for (int h = 1; h <= H; ++h) {
    Estimate e = run_estimator(kind, data, policy, cfg, &ratios, h);
    infl[h - 1] = e.influence;
    if (infl[h - 1].empty()) infl[h - 1].assign(n, 0.0);
    curve.horizons.push_back(std::move(e));
  }

  // multiplier bootstrap for simultaneous bands: sup_t |mean_i Z_i D_it| / SE_t
  std::vector<double> se(H);
  for (int h = 0; h < H; ++h) se[h] = curve.horizons[h].se;
  std::vector<double> sup(band_replicates, 0.0);
  for (int b = 0; b < band_replicates; ++b) {
    double worst = 0.0;
    for (int h = 0; h < H; ++h) {
      if (!(se[h] > 0.0)) continue;
      double acc = 0.0;
      for (int i = 0; i < n; ++i)
        acc += counter_normal(cfg.seed ^ 0xbadd0, b, i) * infl[h][i];
      worst = std::max(worst, std::abs(acc / n) / se[h]);
    }
    sup[b] = worst;
  }
  std::sort(sup.begin(), sup.end());
  const double z_pt = z_for_alpha(cfg.alpha);
  double q = sup.empty() ? z_pt : sup[static_cast<std::size_t>(
                                   std::min<double>(sup.size() - 1,
                                                    std::ceil(curve.band_level * sup.size()) - 1))];
  q = std::max(q, z_pt);  // simultaneous band always contains the pointwise CI
  curve.band_half_width.resize(H);
  for (int h = 0; h < H; ++h)
    curve.band_half_width[h] = (se[h] > 0.0 ? q * se[h] : 0.0);

  // isotonic correction: incidence is monotone nondecreasing in horizon
  std::vector<double> pts(H);
  for (int h = 0; h < H; ++h) pts[h] = curve.horizons[h].psi;
  const std::vector<double> iso = isotonic_nondecreasing(pts);
  for (int h = 0; h < H; ++h) {
    curve.horizons[h].psi = iso[h];
    curve.horizons[h].finalize_ci();
  }
  return curve;
}

}  // namespace lmtp
