// Bridges panel data, policies, and learners: history design matrices and
// counterfactual (shifted) exposure computation.
#pragma once

#include <vector>

#include "lmtp/learners.hpp"
#include "lmtp/panel.hpp"
#include "lmtp/policy.hpp"

namespace lmtp {

// Design matrix for a regression at time t: history columns (L_0..L_t and
// A_0..A_{t-1}) plus the time-t exposure. Unavailable cells are NaN; callers
// subset to the rows they fit or predict on.
inline DesignMatrix history_design(const PanelDataset& data, int t,
                                   const std::vector<double>* exposure_override = nullptr) {
  DesignMatrix d;
  d.names = data.history_columns(t);
  d.names.push_back(data.schema().exposures[t]);
  const int n = data.n_units();
  d.X.resize(n, static_cast<Eigen::Index>(d.names.size()));
  for (std::size_t j = 0; j + 1 < d.names.size(); ++j) {
    const auto& col = data.column(d.names[j]);
    for (int i = 0; i < n; ++i) d.X(i, static_cast<Eigen::Index>(j)) = col[i];
  }
  const Eigen::Index last = static_cast<Eigen::Index>(d.names.size()) - 1;
  if (exposure_override) {
    for (int i = 0; i < n; ++i) d.X(i, last) = (*exposure_override)[i];
  } else {
    const auto& col = data.column(data.schema().exposures[t]);
    for (int i = 0; i < n; ++i) d.X(i, last) = col[i];
  }
  return d;
}

// Counterfactual exposures A_t^d for every unit and time. The policy is
// applied to the natural value (the observed exposure) and, when
// `counterfactual_history` is set, to a history whose earlier exposures have
// already been shifted. Returns NaN where the unit is unobserved.
inline std::vector<std::vector<double>> shifted_exposures(const PanelDataset& data,
                                                          const Policy& policy,
                                                          bool counterfactual_history = true) {
  const int n = data.n_units();
  const int tau = data.horizon();
  std::vector<std::vector<double>> ad(tau + 1, std::vector<double>(n, kNaN));
  for (int i = 0; i < n; ++i) {
    std::vector<double> natural_prior;  // observed A_0..A_{t-1}
    std::vector<double> cf_prior;       // shifted A_0..A_{t-1}
    for (int t = 0; t <= tau; ++t) {
      if (!data.observed_through(i, t)) break;
      const double a = data.exposure(i, t);
      if (is_missing(a)) break;
      PolicyContext ctx;
      ctx.t = t;
      ctx.natural_a = a;
      ctx.prior_exposures = natural_prior;
      // history with counterfactual exposures substituted
      std::vector<std::string> names = data.history_columns(t);
      std::vector<double> values(names.size());
      std::size_t expo_seen = 0;
      for (std::size_t j = 0; j < names.size(); ++j) {
        if (expo_seen < cf_prior.size() && names[j] == data.schema().exposures[expo_seen]) {
          values[j] = counterfactual_history ? cf_prior[expo_seen]
                                             : data.column(names[j])[i];
          ++expo_seen;
        } else {
          values[j] = data.column(names[j])[i];
        }
      }
      ctx.hist_names = &names;
      ctx.hist_values = &values;
      if (policy.stochastic_at(t)) ctx.eps = policy.draw_randomizer(policy.seed(), i, t).value;
      const double shifted = policy.evaluate(ctx);
      ad[t][i] = shifted;
      natural_prior.push_back(a);
      cf_prior.push_back(counterfactual_history ? shifted : a);
    }
  }
  return ad;
}

}  // namespace lmtp
