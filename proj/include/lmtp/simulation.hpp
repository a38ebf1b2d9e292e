// Fully known synthetic data-generating processes, counterfactual oracles,
// and a scenario harness for robustness experiments.
//
// A DgpSpec lists one conditional law per column, in sampling order. The same
// laws drive observed-data sampling (sample_dgp), exact enumeration
// (oracle_exact, discrete laws only), and counterfactual Monte Carlo
// (oracle_mc). Oracles disable the censoring law: the target is the
// counterfactual world where every unit is observed through the full horizon.
#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "lmtp/estimators.hpp"
#include "lmtp/panel.hpp"
#include "lmtp/policy.hpp"
#include "lmtp/rng.hpp"

namespace lmtp {

struct DgpLaw {
  enum Kind { BernoulliIdentity, BernoulliLogit, NormalLaw, Constant } kind = Constant;
  double intercept = 0.0;
  std::vector<std::pair<std::string, double>> terms;  // coefficient on an earlier column
  double sigma = 1.0;                                 // NormalLaw only

  double linear(const std::map<std::string, double>& values) const {
    double v = intercept;
    for (const auto& [name, coef] : terms) {
      auto it = values.find(name);
      if (it == values.end())
        throw config_error("law references column '" + name + "' not yet sampled");
      v += coef * it->second;
    }
    return v;
  }

  bool discrete() const { return kind != NormalLaw; }
};

struct DgpSpec {
  std::string id;
  PanelSchema schema;
  std::map<std::string, DgpLaw> laws;

  struct Step {
    std::string column;
    enum Role { Covariate, Exposure, Censoring, Survival, Outcome } role = Covariate;
    int t = 0;
  };

  std::vector<Step> sample_order() const {
    std::vector<Step> order;
    const int tau = static_cast<int>(schema.exposures.size()) - 1;
    for (int t = 0; t <= tau; ++t) {
      for (const auto& c : schema.covariates.at(t)) order.push_back({c, Step::Covariate, t});
      order.push_back({schema.exposures[t], Step::Exposure, t});
      if (!schema.censoring.empty()) order.push_back({schema.censoring[t], Step::Censoring, t});
      if (!schema.survival_outcomes.empty())
        order.push_back({schema.survival_outcomes[t], Step::Survival, t});
    }
    if (!schema.outcome.empty()) order.push_back({schema.outcome, Step::Outcome, tau});
    return order;
  }

  void check() const {
    if (schema.exposures.empty()) throw config_error("dgp declares no exposures");
    for (const auto& step : sample_order()) {
      auto it = laws.find(step.column);
      if (it == laws.end()) throw config_error("dgp has no law for column " + step.column);
      if (it->second.kind == DgpLaw::NormalLaw && !(it->second.sigma > 0.0))
        throw config_error("normal law for " + step.column + " needs sigma > 0");
    }
  }

  bool discrete() const {
    if (schema.exposure_kind == ExposureKind::Continuous) return false;
    for (const auto& [name, law] : laws)
      if (!law.discrete()) return false;
    return true;
  }
};

namespace detail {

inline double law_probability(const DgpLaw& law, const std::map<std::string, double>& values,
                              const std::string& column) {
  double p = law.kind == DgpLaw::BernoulliLogit ? expit(law.linear(values)) : law.linear(values);
  if (law.kind == DgpLaw::BernoulliIdentity && (p < -1e-12 || p > 1.0 + 1e-12))
    throw numeric_error("improper law: P(" + column + "=1) = " + std::to_string(p));
  return clip(p, 0.0, 1.0);
}

inline double sample_law(const DgpLaw& law, const std::map<std::string, double>& values,
                         const std::string& column, CounterRng& rng) {
  switch (law.kind) {
    case DgpLaw::Constant: return law.intercept;
    case DgpLaw::NormalLaw: return law.linear(values) + law.sigma * rng.normal();
    case DgpLaw::BernoulliIdentity:
    case DgpLaw::BernoulliLogit:
      return rng.uniform() < law_probability(law, values, column) ? 1.0 : 0.0;
  }
  return kNaN;
}

inline std::vector<std::string> dgp_history_names(const PanelSchema& schema, int t) {
  std::vector<std::string> names;
  for (int s = 0; s <= t; ++s) {
    for (const auto& c : schema.covariates[s]) names.push_back(c);
    if (s < t) names.push_back(schema.exposures[s]);
  }
  return names;
}

}  // namespace detail

// n i.i.d. trajectories from the observed-data law. After an event the unit
// stays in the data with Y carried forward and censoring forced open; after
// censoring all later cells are missing.
inline PanelDataset sample_dgp(const DgpSpec& spec, int n, std::uint64_t seed) {
  spec.check();
  const auto order = spec.sample_order();
  std::map<std::string, std::vector<double>> columns;
  for (const auto& step : order) columns[step.column].assign(n, kNaN);
  std::vector<std::string> ids;
  ids.reserve(n);
  for (int i = 0; i < n; ++i) ids.push_back(std::to_string(i));

  for (int i = 0; i < n; ++i) {
    CounterRng rng(seed, static_cast<std::uint64_t>(i));
    std::map<std::string, double> vals;
    bool censored = false, event = false;
    for (const auto& step : order) {
      if (censored) break;
      const DgpLaw& law = spec.laws.at(step.column);
      double v;
      switch (step.role) {
        case DgpSpec::Step::Censoring:
          // death precludes censoring; events stay in view
          v = event ? 1.0 : detail::sample_law(law, vals, step.column, rng);
          if (v == 0.0) censored = true;
          break;
        case DgpSpec::Step::Survival:
          v = event ? 1.0 : detail::sample_law(law, vals, step.column, rng);
          if (v == 1.0) event = true;
          break;
        default:
          v = detail::sample_law(law, vals, step.column, rng);
          break;
      }
      vals[step.column] = v;
      columns[step.column][i] = v;
    }
  }
  return PanelDataset::from_columns(spec.schema, std::move(ids), std::move(columns));
}

// ---------------------------------------------------------------------------
// oracles

namespace detail {

// One counterfactual trajectory: natural draws at each step, the policy
// applied to exposures with counterfactual history propagation, censoring
// disabled. Returns Y(d) at the requested horizon.
inline double counterfactual_draw(const DgpSpec& spec, const Policy& policy, int horizon,
                                  std::uint64_t seed, std::uint64_t rep) {
  CounterRng rng(seed, rep);
  std::map<std::string, double> vals;
  std::vector<double> natural_prior;
  bool event = false;
  const bool survival = !spec.schema.survival_outcomes.empty();
  for (const auto& step : spec.sample_order()) {
    const DgpLaw& law = spec.laws.at(step.column);
    switch (step.role) {
      case DgpSpec::Step::Censoring:
        vals[step.column] = 1.0;
        break;
      case DgpSpec::Step::Survival: {
        const double v = event ? 1.0 : sample_law(law, vals, step.column, rng);
        if (v == 1.0) event = true;
        vals[step.column] = v;
        break;
      }
      case DgpSpec::Step::Exposure: {
        const double natural = sample_law(law, vals, step.column, rng);
        PolicyContext ctx;
        ctx.t = step.t;
        ctx.natural_a = natural;
        ctx.prior_exposures = natural_prior;
        std::vector<std::string> names = dgp_history_names(spec.schema, step.t);
        std::vector<double> values;
        values.reserve(names.size());
        for (const auto& nm : names) values.push_back(vals.at(nm));
        ctx.hist_names = &names;
        ctx.hist_values = &values;
        if (policy.stochastic_at(step.t))
          ctx.eps = policy.draw_randomizer(mix_key(seed, 0xe95), static_cast<int>(rep),
                                           step.t).value;
        vals[step.column] = policy.evaluate(ctx);
        natural_prior.push_back(natural);
        break;
      }
      default:
        vals[step.column] = sample_law(law, vals, step.column, rng);
        break;
    }
  }
  if (survival) {
    const int h = horizon < 1 ? static_cast<int>(spec.schema.survival_outcomes.size())
                              : horizon;
    return vals.at(spec.schema.survival_outcomes.at(h - 1));
  }
  return vals.at(spec.schema.outcome);
}

}  // namespace detail

struct OracleMc {
  double psi = kNaN;
  double se = kNaN;
};

inline OracleMc oracle_mc(const DgpSpec& spec, const Policy& policy, int m,
                          std::uint64_t seed, int horizon = -1) {
  spec.check();
  if (m < 1) throw config_error("oracle_mc needs at least one replicate");
  std::vector<double> draws(m);
  for (int r = 0; r < m; ++r)
    draws[r] = detail::counterfactual_draw(spec, policy, horizon, seed, r);
  OracleMc out;
  out.psi = mean_of(draws);
  out.se = sd_of(draws) / std::sqrt(static_cast<double>(m));
  return out;
}

// Exact E[Y(d)] by enumerating every discrete history path, propagating the
// counterfactual exposures, and weighting by true path probabilities.
inline double oracle_exact(const DgpSpec& spec, const Policy& policy, int horizon = -1) {
  spec.check();
  if (!spec.discrete())
    throw config_error("oracle_exact supports fully discrete specs only; use oracle_mc");
  const auto order = spec.sample_order();
  const bool survival = !spec.schema.survival_outcomes.empty();
  const int h = survival
                    ? (horizon < 1 ? static_cast<int>(spec.schema.survival_outcomes.size())
                                   : horizon)
                    : static_cast<int>(spec.schema.exposures.size());

  double psi = 0.0;
  struct Frame {
    std::map<std::string, double> vals;
    std::vector<double> natural_prior;
  };

  std::function<void(std::size_t, Frame&, double)> walk = [&](std::size_t idx, Frame& fr,
                                                              double prob) {
    if (prob <= 0.0) return;
    if (idx == order.size()) {
      if (survival) {
        // no event by the horizon on this path
      } else {
        psi += prob * fr.vals.at(spec.schema.outcome);
      }
      return;
    }
    const auto& step = order[idx];
    // survival outcome settled by horizon h: later times cannot contribute
    if (survival && step.t >= h) return;
    const DgpLaw& law = spec.laws.at(step.column);
    switch (step.role) {
      case DgpSpec::Step::Censoring:
        fr.vals[step.column] = 1.0;
        walk(idx + 1, fr, prob);
        break;
      case DgpSpec::Step::Survival: {
        const double p = detail::law_probability(law, fr.vals, step.column);
        // event: Y stays 1 through every later horizon
        if (step.t <= h - 1) psi += prob * p;
        fr.vals[step.column] = 0.0;
        walk(idx + 1, fr, prob * (1.0 - p));
        fr.vals.erase(step.column);
        break;
      }
      case DgpSpec::Step::Outcome: {
        if (law.kind == DgpLaw::Constant) {
          fr.vals[step.column] = law.intercept;
          walk(idx + 1, fr, prob);
          fr.vals.erase(step.column);
        } else {
          const double p = detail::law_probability(law, fr.vals, step.column);
          fr.vals[step.column] = 1.0;
          walk(idx + 1, fr, prob * p);
          fr.vals[step.column] = 0.0;
          walk(idx + 1, fr, prob * (1.0 - p));
          fr.vals.erase(step.column);
        }
        break;
      }
      case DgpSpec::Step::Exposure: {
        const auto support = policy.randomizer_support(step.t);
        if (!support)
          throw config_error("policy randomizer at time " + std::to_string(step.t) +
                             " is not enumerable; use oracle_mc");
        std::vector<std::pair<double, double>> naturals;
        if (law.kind == DgpLaw::Constant) {
          naturals.push_back({law.intercept, 1.0});
        } else {
          const double p = detail::law_probability(law, fr.vals, step.column);
          naturals.push_back({1.0, p});
          naturals.push_back({0.0, 1.0 - p});
        }
        std::vector<std::string> names = detail::dgp_history_names(spec.schema, step.t);
        std::vector<double> values;
        values.reserve(names.size());
        for (const auto& nm : names) values.push_back(fr.vals.at(nm));
        for (const auto& [natural, pa] : naturals) {
          for (const auto& [eps, pe] : *support) {
            PolicyContext ctx;
            ctx.t = step.t;
            ctx.natural_a = natural;
            ctx.eps = eps;
            ctx.prior_exposures = fr.natural_prior;
            ctx.hist_names = &names;
            ctx.hist_values = &values;
            fr.vals[step.column] = policy.evaluate(ctx);
            fr.natural_prior.push_back(natural);
            walk(idx + 1, fr, prob * pa * pe);
            fr.natural_prior.pop_back();
          }
        }
        fr.vals.erase(step.column);
        break;
      }
      case DgpSpec::Step::Covariate: {
        if (law.kind == DgpLaw::Constant) {
          fr.vals[step.column] = law.intercept;
          walk(idx + 1, fr, prob);
        } else {
          const double p = detail::law_probability(law, fr.vals, step.column);
          fr.vals[step.column] = 1.0;
          walk(idx + 1, fr, prob * p);
          fr.vals[step.column] = 0.0;
          walk(idx + 1, fr, prob * (1.0 - p));
        }
        fr.vals.erase(step.column);
        break;
      }
    }
  };

  Frame fr;
  walk(0, fr, 1.0);
  return psi;
}

// ---------------------------------------------------------------------------
// scenario harness

// A misspecification scenario breaks a nuisance at chosen times by omitting
// named confounders from its feature list (feature omission is unambiguous
// and guaranteed to bias the fit).
struct Scenario {
  std::string id;
  std::vector<std::vector<std::string>> outcome_omit;  // [t] columns dropped
  std::vector<std::vector<std::string>> ratio_omit;
};

struct ScenarioCell {
  std::string scenario;
  std::string estimator;
  double truth = kNaN;
  double bias = kNaN;
  double mc_sd = kNaN;
  double mean_se = kNaN;
  double coverage = kNaN;  // NaN for estimators without analytic SEs
  int replicates = 0;
};

namespace detail {

inline std::vector<std::string> design_columns(const PanelSchema& schema, int t) {
  std::vector<std::string> cols = dgp_history_names(schema, t);
  cols.push_back(schema.exposures[t]);
  return cols;
}

inline std::vector<std::vector<std::string>> allow_lists(
    const PanelSchema& schema, const std::vector<std::vector<std::string>>& omit) {
  const int tau = static_cast<int>(schema.exposures.size()) - 1;
  std::vector<std::vector<std::string>> allow;
  if (omit.empty()) return allow;  // empty = unrestricted
  for (int t = 0; t <= tau; ++t) {
    const auto cols = design_columns(schema, t);
    const auto& drop = omit[std::min<std::size_t>(t, omit.size() - 1)];
    for (const auto& d : drop) {
      bool anywhere = false;
      for (int s = 0; s <= tau && !anywhere; ++s)
        for (const auto& c : design_columns(schema, s))
          if (c == d) { anywhere = true; break; }
      if (!anywhere)
        throw config_error("scenario omits unknown column '" + d + "'");
    }
    std::vector<std::string> keep;
    for (const auto& c : cols)
      if (std::find(drop.begin(), drop.end(), c) == drop.end()) keep.push_back(c);
    if (keep.empty())
      throw config_error("scenario omits every feature at time " + std::to_string(t));
    allow.push_back(std::move(keep));
  }
  return allow;
}

}  // namespace detail

inline std::vector<ScenarioCell> run_scenario_matrix(
    const DgpSpec& spec, const Policy& policy, const std::vector<Scenario>& scenarios,
    int n, int replicates, const std::vector<EstimatorKind>& estimators,
    const NuisanceConfig& base_cfg, std::uint64_t seed, double truth_override = kNaN,
    int oracle_mc_reps = 200000) {
  if (replicates < 1) throw config_error("scenario matrix needs at least one replicate");
  double truth = truth_override;
  if (is_missing(truth)) {
    bool enumerable = spec.discrete();
    if (enumerable) {
      const int tau = static_cast<int>(spec.schema.exposures.size()) - 1;
      for (int t = 0; t <= tau && enumerable; ++t)
        enumerable = policy.randomizer_support(t).has_value();
    }
    truth = enumerable ? oracle_exact(spec, policy)
                       : oracle_mc(spec, policy, oracle_mc_reps, mix_key(seed, 0x0c1e)).psi;
  }

  std::vector<ScenarioCell> out;
  for (const auto& sc : scenarios) {
    NuisanceConfig cfg = base_cfg;
    cfg.outcome_features = detail::allow_lists(spec.schema, sc.outcome_omit);
    cfg.ratio_features = detail::allow_lists(spec.schema, sc.ratio_omit);

    std::map<std::string, std::vector<double>> psis, ses;
    std::map<std::string, std::vector<int>> covered;
    for (int r = 0; r < replicates; ++r) {
      const PanelDataset data = sample_dgp(spec, n, mix_key(seed, 0xda7a, r));
      cfg.seed = mix_key(seed, 0x5eed, r);
      bool need_ratios = false;
      for (EstimatorKind k : estimators)
        if (k != EstimatorKind::GComp) need_ratios = true;
      RatioEstimates ratios;
      if (need_ratios) ratios = estimate_ratios(data, policy, cfg);
      for (EstimatorKind k : estimators) {
        const Estimate e = run_estimator(k, data, policy, cfg,
                                         need_ratios ? &ratios : nullptr);
        psis[e.estimator].push_back(e.psi);
        if (!std::isnan(e.se)) {
          ses[e.estimator].push_back(e.se);
          covered[e.estimator].push_back(e.covers(truth) ? 1 : 0);
        }
      }
    }
    for (EstimatorKind k : estimators) {
      const std::string name = estimator_name(k);
      ScenarioCell cell;
      cell.scenario = sc.id;
      cell.estimator = name;
      cell.truth = truth;
      cell.replicates = replicates;
      const auto& ps = psis[name];
      cell.bias = mean_of(ps) - truth;
      cell.mc_sd = ps.size() > 1 ? sd_of(ps) : 0.0;
      if (!ses[name].empty()) {
        cell.mean_se = mean_of(ses[name]);
        double hits = 0.0;
        for (int c : covered[name]) hits += c;
        cell.coverage = hits / covered[name].size();
      }
      out.push_back(std::move(cell));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// shipped DGP corpus

// (a) Point treatment, fully discrete, identity-link Bernoulli laws:
// L ~ Bern(0.5), A|L ~ Bern(0.3 + 0.4 L), Y|A,L ~ Bern(0.2 + 0.3 A + 0.2 L).
// Under d = 1: E[Y(1)] = 0.2 + 0.3 + 0.2 * 0.5 = 0.6.
inline DgpSpec dgp_point_treatment() {
  DgpSpec s;
  s.id = "point-treatment";
  s.schema.covariates = {{"l"}};
  s.schema.exposures = {"a"};
  s.schema.outcome = "y";
  s.schema.exposure_kind = ExposureKind::Binary;
  s.laws["l"] = {DgpLaw::BernoulliIdentity, 0.5, {}, 1.0};
  s.laws["a"] = {DgpLaw::BernoulliIdentity, 0.3, {{"l", 0.4}}, 1.0};
  s.laws["y"] = {DgpLaw::BernoulliIdentity, 0.2, {{"a", 0.3}, {"l", 0.2}}, 1.0};
  return s;
}

// (b) Two periods with time-varying confounding: L_1 confounds A_1 and Y and
// is itself affected by A_0, so single-time adjustment fails.
inline DgpSpec dgp_two_period() {
  DgpSpec s;
  s.id = "two-period";
  s.schema.covariates = {{"l_0"}, {"l_1"}};
  s.schema.exposures = {"a_0", "a_1"};
  s.schema.outcome = "y";
  s.schema.exposure_kind = ExposureKind::Binary;
  // Confounding is deliberately strong (l_1 nearly determines a_1 and carries
  // most of the outcome signal) so that misspecifying one nuisance has a
  // visible effect; E[Y(1,1)] = 0.71 in closed form.
  s.laws["l_0"] = {DgpLaw::BernoulliIdentity, 0.5, {}, 1.0};
  s.laws["a_0"] = {DgpLaw::BernoulliIdentity, 0.1, {{"l_0", 0.8}}, 1.0};
  s.laws["l_1"] = {DgpLaw::BernoulliIdentity, 0.1, {{"a_0", 0.4}, {"l_0", 0.4}}, 1.0};
  s.laws["a_1"] = {DgpLaw::BernoulliIdentity, 0.1, {{"l_1", 0.6}, {"a_0", 0.1}}, 1.0};
  s.laws["y"] = {DgpLaw::BernoulliIdentity, 0.05,
                 {{"a_0", 0.1}, {"a_1", 0.15}, {"l_1", 0.55}, {"l_0", 0.05}}, 1.0};
  return s;
}

// (c) 14-day survival with a binary exposure, informative censoring, and a
// protective, sticky treatment; structurally mirrors an ICU cohort where
// death precludes censoring.
inline DgpSpec dgp_survival() {
  DgpSpec s;
  s.id = "survival-14";
  const int tau = 13;
  for (int t = 0; t <= tau; ++t) {
    const std::string ts = std::to_string(t);
    s.schema.covariates.push_back({"l_" + ts});
    s.schema.exposures.push_back("a_" + ts);
    s.schema.censoring.push_back("c_" + ts);
    s.schema.survival_outcomes.push_back("y_" + ts);
  }
  s.schema.exposure_kind = ExposureKind::Binary;
  s.laws["l_0"] = {DgpLaw::BernoulliIdentity, 0.5, {}, 1.0};
  s.laws["a_0"] = {DgpLaw::BernoulliIdentity, 0.1, {{"l_0", 0.4}}, 1.0};
  for (int t = 0; t <= tau; ++t) {
    const std::string ts = std::to_string(t);
    if (t > 0) {
      const std::string ps = std::to_string(t - 1);
      s.laws["l_" + ts] = {DgpLaw::BernoulliIdentity, 0.15,
                           {{"l_" + ps, 0.5}, {"a_" + ps, 0.2}}, 1.0};
      s.laws["a_" + ts] = {DgpLaw::BernoulliIdentity, 0.05,
                           {{"l_" + ts, 0.35}, {"a_" + ps, 0.5}}, 1.0};
    }
    s.laws["c_" + ts] = {DgpLaw::BernoulliIdentity, 0.98, {{"l_" + ts, -0.02}}, 1.0};
    s.laws["y_" + ts] = {DgpLaw::BernoulliIdentity, 0.012,
                         {{"l_" + ts, 0.025}, {"a_" + ts, -0.01}}, 1.0};
  }
  return s;
}

// (d) Continuous exposure with an additive-shift target: A | L ~ N(1 + 0.5 L, 1),
// Y | A, L ~ N(0.5 A + 0.3 L, 1). "shift add delta" moves psi by 0.5 delta.
inline DgpSpec dgp_continuous_shift() {
  DgpSpec s;
  s.id = "continuous-shift";
  s.schema.covariates = {{"l"}};
  s.schema.exposures = {"a"};
  s.schema.outcome = "y";
  s.schema.exposure_kind = ExposureKind::Continuous;
  s.laws["l"] = {DgpLaw::BernoulliIdentity, 0.5, {}, 1.0};
  s.laws["a"] = {DgpLaw::NormalLaw, 1.0, {{"l", 0.5}}, 1.0};
  s.laws["y"] = {DgpLaw::NormalLaw, 0.0, {{"a", 0.5}, {"l", 0.3}}, 1.0};
  return s;
}

inline std::vector<DgpSpec> dgp_corpus() {
  return {dgp_point_treatment(), dgp_two_period(), dgp_survival(), dgp_continuous_shift()};
}

inline DgpSpec dgp_by_id(const std::string& id) {
  for (auto& s : dgp_corpus())
    if (s.id == id) return s;
  throw config_error("unknown dgp id: " + id);
}

}  // namespace lmtp
