// Density-ratio estimation r_t = g_t^d(a_t|h_t) / g_t(a_t|h_t) via the
// duplicate-and-classify trick: each at-risk row appears twice, once with the
// observed exposure (label 0) and once with the policy-shifted exposure
// (label 1); classifier odds at the observed row estimate the ratio.
//
// Cumulative weights fold in censoring as an additional binary "treatment"
// intervened to 1, contributing 1/P(C_t=1 | A_t, H_t) per time.
#pragma once

#include <array>
#include <string>
#include <vector>

#include "lmtp/design.hpp"
#include "lmtp/learners.hpp"
#include "lmtp/panel.hpp"
#include "lmtp/policy.hpp"

namespace lmtp {

struct ClassificationFrame {
  DesignMatrix X;               // 2m rows: originals then duplicates
  Eigen::VectorXd label;        // 0 for originals, 1 for duplicates
  std::vector<int> units;       // unit index per original row (size m)
};

// Units eligible for the time-t exposure model: observed through t and, for
// survival data, still event-free at the start of interval t.
inline std::vector<int> at_risk_units(const PanelDataset& data, int t) {
  std::vector<int> out;
  for (int i = 0; i < data.n_units(); ++i) {
    if (!data.observed_through(i, t)) continue;
    if (data.is_survival() && data.event_by(i, t - 1)) continue;
    out.push_back(i);
  }
  return out;
}

inline ClassificationFrame build_ratio_frame(const PanelDataset& data, const Policy& policy,
                                             int t, bool counterfactual_history) {
  const auto shifted = shifted_exposures(data, policy, counterfactual_history);
  const DesignMatrix base = history_design(data, t);
  const auto units = at_risk_units(data, t);
  const int m = static_cast<int>(units.size());
  ClassificationFrame f;
  f.units = units;
  f.X.names = base.names;
  f.X.X.resize(2 * m, base.X.cols());
  f.label.resize(2 * m);
  const Eigen::Index expo = base.X.cols() - 1;
  for (int i = 0; i < m; ++i) {
    f.X.X.row(i) = base.X.row(units[i]);
    f.label[i] = 0.0;
    f.X.X.row(m + i) = base.X.row(units[i]);
    const double ad = shifted[t][units[i]];
    if (is_missing(ad))
      throw data_error("shifted exposure unavailable for an at-risk unit at time " +
                       std::to_string(t));
    f.X.X(m + i, expo) = ad;
    f.label[m + i] = 1.0;
  }
  return f;
}

// Cross-fitted classifier odds for the original rows. Both copies of a unit
// live in the unit's fold, so no model ever sees a held-out unit. Returns one
// value per unit of the full dataset (NaN where not at risk).
inline std::vector<double> fit_ratio(const PanelDataset& data, const Policy& policy, int t,
                                     const std::vector<LearnerSpec>& specs,
                                     const FoldAssignment& folds, bool counterfactual_history,
                                     int cv_folds, std::uint64_t seed,
                                     const std::vector<std::string>& feature_allow = {}) {
  ClassificationFrame frame = build_ratio_frame(data, policy, t, counterfactual_history);
  if (!feature_allow.empty()) frame.X = frame.X.select(feature_allow);
  const int m = static_cast<int>(frame.units.size());
  if (m == 0) throw data_error("no at-risk units at time " + std::to_string(t));
  std::vector<double> r(data.n_units(), kNaN);

  auto predict_orig = [&](const EnsembleModel& model, const std::vector<int>& rows) {
    const Eigen::VectorXd p = model.predict(frame.X.rows(rows));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double pc = clip_prob(p[i]);
      r[frame.units[rows[i]]] = pc / (1.0 - pc);
    }
  };

  const int k = folds.k;
  if (k <= 1) {
    std::vector<int> all(2 * m);
    std::iota(all.begin(), all.end(), 0);
    Eigen::VectorXd y(2 * m);
    for (int i = 0; i < 2 * m; ++i) y[i] = frame.label[i];
    const EnsembleModel model = fit_stack(specs, frame.X, y, cv_folds, StackLoss::Log, seed);
    std::vector<int> orig(m);
    std::iota(orig.begin(), orig.end(), 0);
    predict_orig(model, orig);
    return r;
  }

  for (int f = 0; f < k; ++f) {
    std::vector<int> train_rows, test_orig_rows;
    for (int i = 0; i < m; ++i) {
      const int u = frame.units[i];
      if (folds.fold[u] == f) {
        test_orig_rows.push_back(i);
      } else {
        train_rows.push_back(i);
        train_rows.push_back(m + i);
      }
    }
    if (train_rows.empty() || test_orig_rows.empty()) continue;
    Eigen::VectorXd y(train_rows.size());
    bool any0 = false, any1 = false;
    for (std::size_t i = 0; i < train_rows.size(); ++i) {
      y[i] = frame.label[train_rows[i]];
      (y[i] == 0.0 ? any0 : any1) = true;
    }
    if (!any0 || !any1)
      throw numeric_error("degenerate ratio classifier: single label in training data");
    const EnsembleModel model =
        fit_stack(specs, frame.X.rows(train_rows), y, cv_folds, StackLoss::Log,
                  mix_key(seed, 0x7a710, f));
    predict_orig(model, test_orig_rows);
  }
  return r;
}

// Cross-fitted P(C_t = 1 | A_t, H_t) for at-risk, not-yet-event units.
inline std::vector<std::vector<double>> fit_censoring_probs(
    const PanelDataset& data, const std::vector<LearnerSpec>& specs,
    const FoldAssignment& folds, int cv_folds, std::uint64_t seed) {
  const int tau = data.horizon();
  std::vector<std::vector<double>> pc(tau + 1, std::vector<double>(data.n_units(), kNaN));
  if (!data.has_censoring()) return pc;
  for (int t = 0; t <= tau; ++t) {
    const DesignMatrix X = history_design(data, t);
    const auto& cens = data.column(data.schema().censoring[t]);
    std::vector<int> rows;
    for (int i : at_risk_units(data, t))
      if (!is_missing(cens[i])) rows.push_back(i);
    if (rows.empty()) continue;
    auto fit_predict = [&](const std::vector<int>& train, const std::vector<int>& test) {
      Eigen::VectorXd y(train.size());
      for (std::size_t i = 0; i < train.size(); ++i) y[i] = cens[train[i]];
      const EnsembleModel model = fit_stack(specs, X.rows(train), y, cv_folds, StackLoss::Log,
                                            mix_key(seed, 0xce45, t));
      const Eigen::VectorXd p = model.predict(X.rows(test));
      for (std::size_t i = 0; i < test.size(); ++i) pc[t][test[i]] = clip(p[i], 0.0, 1.0);
    };
    if (folds.k <= 1) {
      fit_predict(rows, rows);
    } else {
      for (int f = 0; f < folds.k; ++f) {
        std::vector<int> train, test;
        for (int i : rows) (folds.fold[i] == f ? test : train).push_back(i);
        if (test.empty()) continue;
        if (train.empty()) train = rows;
        fit_predict(train, test);
      }
    }
  }
  return pc;
}

// Per-unit, per-time ratios with cumulative censoring-adjusted weights.
struct RatioEstimates {
  // r[t][u]: exposure density ratio (NaN off risk set)
  std::vector<std::vector<double>> ratio;
  // cens_factor[t][u]: 1/P(C_t=1|.) for units observed at t+1, 0 once
  // censored, 1 with no censoring or after an event
  std::vector<std::vector<double>> cens_factor;
  // frozen[t][u]: unit had its event before t; total factor is 1
  std::vector<std::vector<char>> frozen;
  std::vector<std::vector<double>> weight;  // w[t][u] = prod_{s<=t} factor_s
  double truncation_quantile = 1.0;         // 1 = untruncated
  std::vector<double> truncation_cap;       // per-time cap actually applied
  int folds = 0;

  int horizon() const { return static_cast<int>(ratio.size()) - 1; }
  int n_units() const { return ratio.empty() ? 0 : static_cast<int>(ratio[0].size()); }

  double factor(int t, int u) const {
    if (frozen[t][u]) return 1.0;
    const double r = ratio[t][u];
    if (is_missing(r)) return 0.0;  // censored before t
    double v = r;
    if (truncation_quantile < 1.0 && !truncation_cap.empty())
      v = std::min(v, truncation_cap[t]);
    return v * cens_factor[t][u];
  }

  void recompute_weights() {
    const int tau = horizon();
    const int n = n_units();
    weight.assign(tau + 1, std::vector<double>(n, 1.0));
    for (int u = 0; u < n; ++u) {
      double w = 1.0;
      for (int t = 0; t <= tau; ++t) {
        w *= factor(t, u);
        weight[t][u] = w;
      }
    }
  }
};

inline RatioEstimates cumulate_ratios(const PanelDataset& data,
                                      std::vector<std::vector<double>> ratios,
                                      const std::vector<std::vector<double>>& cens_probs) {
  const int tau = data.horizon();
  const int n = data.n_units();
  if (static_cast<int>(ratios.size()) != tau + 1)
    throw data_error("cumulate_ratios: ratios missing a time point");
  RatioEstimates est;
  est.ratio = std::move(ratios);
  est.cens_factor.assign(tau + 1, std::vector<double>(n, 1.0));
  est.frozen.assign(tau + 1, std::vector<char>(n, 0));
  for (int t = 0; t <= tau; ++t) {
    for (int u = 0; u < n; ++u) {
      if (data.is_survival() && data.event_by(u, t - 1)) {
        est.frozen[t][u] = 1;
        continue;
      }
      if (!data.observed_through(u, t)) {
        est.cens_factor[t][u] = 0.0;
        continue;
      }
      if (data.has_censoring()) {
        const double c = data.column(data.schema().censoring[t])[u];
        if (is_missing(c) || c == 0.0) {
          est.cens_factor[t][u] = 0.0;
        } else {
          const double p = cens_probs.empty() ? 1.0 : cens_probs[t][u];
          if (is_missing(p)) {
            est.cens_factor[t][u] = 1.0;
          } else if (p <= 0.0) {
            throw numeric_error("positivity failure: estimated censoring probability 0 for "
                                "observed unit " + data.unit_ids()[u] + " at time " +
                                std::to_string(t));
          } else {
            est.cens_factor[t][u] = 1.0 / clip_prob(p);
          }
        }
      }
    }
  }
  est.recompute_weights();
  return est;
}

// Cap per-time ratios at their empirical q-quantile and recompute weights.
inline RatioEstimates truncate_ratios(RatioEstimates est, double q) {
  if (!(q > 0.5 && q <= 1.0))
    throw config_error("truncation quantile must lie in (0.5, 1]");
  est.truncation_quantile = q;
  est.truncation_cap.assign(est.ratio.size(), std::numeric_limits<double>::infinity());
  if (q < 1.0) {
    for (std::size_t t = 0; t < est.ratio.size(); ++t) {
      std::vector<double> vals;
      for (double r : est.ratio[t])
        if (!is_missing(r)) vals.push_back(r);
      if (vals.empty()) continue;
      std::sort(vals.begin(), vals.end());
      const std::size_t idx =
          std::min(vals.size() - 1,
                   static_cast<std::size_t>(std::ceil(q * vals.size())) - 1);
      est.truncation_cap[t] = vals[idx];
    }
  }
  est.recompute_weights();
  return est;
}

struct PositivitySummary {
  struct TimeRow {
    int t = 0;
    double min = 0, q25 = 0, median = 0, q75 = 0, max = 0, mean = 0;
    int alerts = 0;  // count above the alert threshold
    std::vector<int> hist_counts;
    std::vector<double> hist_edges;
  };
  double alert_threshold = 50.0;
  std::vector<TimeRow> rows;
};

inline PositivitySummary positivity_report(const RatioEstimates& est,
                                           double alert_threshold = 50.0, int bins = 20) {
  PositivitySummary sum;
  sum.alert_threshold = alert_threshold;
  for (std::size_t t = 0; t < est.ratio.size(); ++t) {
    std::vector<double> vals;
    for (double r : est.ratio[t])
      if (!is_missing(r)) vals.push_back(r);
    PositivitySummary::TimeRow row;
    row.t = static_cast<int>(t);
    if (!vals.empty()) {
      std::sort(vals.begin(), vals.end());
      auto quant = [&](double p) {
        const double pos = p * (vals.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const double frac = pos - lo;
        return lo + 1 < vals.size() ? vals[lo] * (1 - frac) + vals[lo + 1] * frac : vals[lo];
      };
      row.min = vals.front();
      row.q25 = quant(0.25);
      row.median = quant(0.5);
      row.q75 = quant(0.75);
      row.max = vals.back();
      row.mean = mean_of(vals);
      for (double v : vals)
        if (v > alert_threshold) ++row.alerts;
      const double lo = vals.front(), hi = vals.back();
      const double width = hi > lo ? (hi - lo) / bins : 1.0;
      row.hist_counts.assign(bins, 0);
      for (int b = 0; b <= bins; ++b) row.hist_edges.push_back(lo + b * width);
      for (double v : vals) {
        int b = static_cast<int>((v - lo) / width);
        if (b >= bins) b = bins - 1;
        ++row.hist_counts[b];
      }
    }
    sum.rows.push_back(std::move(row));
  }
  return sum;
}

}  // namespace lmtp
