// Declarative run configuration: one JSON file per command, strict schema
// (unknown keys rejected), one mandatory root seed feeding all randomness.
#pragma once

#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "lmtp/estimators.hpp"
#include "lmtp/panel.hpp"
#include "lmtp/simulation.hpp"

namespace lmtp {

using Json = nlohmann::json;

enum class RunMode { Estimate, Simulate, Survival };

struct RunConfig {
  RunMode mode = RunMode::Estimate;
  std::uint64_t seed = 0;

  // data source: a CSV with schema mapping, or a DGP plus a sample size
  std::optional<std::string> data_path;
  PanelSchema schema;
  std::optional<DgpSpec> dgp;
  int n = 0;

  std::string policy_text;
  std::optional<std::string> policy_b_text;  // second policy -> contrast row
  ContrastType contrast = ContrastType::Difference;
  std::uint64_t policy_seed = 0;

  std::vector<EstimatorKind> estimators{EstimatorKind::Tmle};
  NuisanceConfig nuisance;

  int replicates = 1;                 // simulate
  std::vector<Scenario> scenarios;    // simulate
  int oracle_mc_reps = 200000;        // simulate, non-enumerable truth
  int band_replicates = 2000;         // survival
  int horizon = -1;

  std::string output = ".";

  ExposureKind exposure_kind() const {
    return dgp ? dgp->schema.exposure_kind : schema.exposure_kind;
  }
  const PanelSchema& active_schema() const { return dgp ? dgp->schema : schema; }
};

namespace detail {

inline void check_keys(const Json& j, const std::set<std::string>& allowed,
                       const std::string& where) {
  if (!j.is_object()) throw config_error(where + " must be an object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key))
      throw config_error("unknown key '" + key + "' in " + where);
}

inline std::vector<std::string> string_list(const Json& j, const std::string& where) {
  if (!j.is_array()) throw config_error(where + " must be an array of strings");
  std::vector<std::string> out;
  for (const auto& v : j) {
    if (!v.is_string()) throw config_error(where + " must contain strings only");
    out.push_back(v.get<std::string>());
  }
  return out;
}

inline std::vector<std::vector<std::string>> nested_string_list(const Json& j,
                                                                const std::string& where) {
  if (!j.is_array()) throw config_error(where + " must be an array of arrays");
  std::vector<std::vector<std::string>> out;
  for (const auto& v : j) out.push_back(string_list(v, where));
  return out;
}

inline PanelSchema parse_schema(const Json& j, const std::string& where) {
  check_keys(j, {"path", "unit_column", "covariates", "exposures", "exposure_kind",
                 "exposure_levels", "censoring", "outcome", "survival_outcomes"},
             where);
  PanelSchema s;
  if (j.contains("unit_column")) s.unit_column = j.at("unit_column").get<std::string>();
  if (!j.contains("covariates") || !j.contains("exposures"))
    throw config_error(where + " needs covariates and exposures");
  s.covariates = nested_string_list(j.at("covariates"), where + ".covariates");
  s.exposures = string_list(j.at("exposures"), where + ".exposures");
  s.exposure_kind = parse_exposure_kind(j.value("exposure_kind", std::string("binary")));
  if (j.contains("exposure_levels"))
    for (const auto& v : j.at("exposure_levels")) s.exposure_levels.push_back(v.get<double>());
  if (j.contains("censoring")) s.censoring = string_list(j.at("censoring"), where + ".censoring");
  if (j.contains("outcome")) s.outcome = j.at("outcome").get<std::string>();
  if (j.contains("survival_outcomes"))
    s.survival_outcomes = string_list(j.at("survival_outcomes"), where + ".survival_outcomes");
  return s;
}

inline DgpLaw parse_law(const Json& j, const std::string& where) {
  check_keys(j, {"kind", "intercept", "terms", "sigma"}, where);
  DgpLaw law;
  const std::string kind = j.value("kind", std::string("constant"));
  if (kind == "bernoulli-identity") law.kind = DgpLaw::BernoulliIdentity;
  else if (kind == "bernoulli-logit") law.kind = DgpLaw::BernoulliLogit;
  else if (kind == "normal") law.kind = DgpLaw::NormalLaw;
  else if (kind == "constant") law.kind = DgpLaw::Constant;
  else throw config_error(where + ": unknown law kind '" + kind + "'");
  law.intercept = j.value("intercept", 0.0);
  law.sigma = j.value("sigma", 1.0);
  if (j.contains("terms")) {
    if (!j.at("terms").is_object()) throw config_error(where + ".terms must be an object");
    for (const auto& [name, coef] : j.at("terms").items())
      law.terms.push_back({name, coef.get<double>()});
  }
  return law;
}

inline DgpSpec parse_dgp(const Json& j) {
  if (j.is_string()) return dgp_by_id(j.get<std::string>());
  check_keys(j, {"id", "covariates", "exposures", "exposure_kind", "exposure_levels",
                 "censoring", "outcome", "survival_outcomes", "laws"},
             "dgp");
  DgpSpec spec;
  spec.id = j.value("id", std::string("custom"));
  Json schema_part = j;
  schema_part.erase("id");
  schema_part.erase("laws");
  spec.schema = parse_schema(schema_part, "dgp");
  if (!j.contains("laws")) throw config_error("dgp needs laws");
  for (const auto& [name, law] : j.at("laws").items())
    spec.laws[name] = parse_law(law, "dgp.laws." + name);
  spec.check();
  return spec;
}

inline LearnerSpec parse_learner(const Json& j, const std::string& where) {
  check_keys(j, {"family", "ridge", "k", "max_depth", "min_leaf", "saturated", "features"},
             where);
  LearnerSpec s;
  s.family = parse_family(j.value("family", std::string("gaussian-glm")));
  s.ridge = j.value("ridge", 0.0);
  s.k = j.value("k", 5);
  s.max_depth = j.value("max_depth", 3);
  s.min_leaf = j.value("min_leaf", 10);
  s.saturated = j.value("saturated", false);
  if (j.contains("features")) s.features = string_list(j.at("features"), where + ".features");
  s.check();
  return s;
}

inline std::vector<LearnerSpec> parse_learner_list(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw config_error(where + " must be a non-empty array");
  std::vector<LearnerSpec> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(parse_learner(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

inline Scenario parse_scenario(const Json& j, const std::string& where) {
  check_keys(j, {"id", "outcome_omit", "ratio_omit"}, where);
  Scenario s;
  s.id = j.value("id", std::string("scenario"));
  if (j.contains("outcome_omit"))
    s.outcome_omit = nested_string_list(j.at("outcome_omit"), where + ".outcome_omit");
  if (j.contains("ratio_omit"))
    s.ratio_omit = nested_string_list(j.at("ratio_omit"), where + ".ratio_omit");
  return s;
}

}  // namespace detail

inline RunConfig parse_run_config(const Json& j, RunMode mode) {
  std::set<std::string> allowed = {"seed",    "data",       "dgp",        "n",
                                   "policy",  "policy_b",   "contrast",   "policy_seed",
                                   "estimators", "learners", "folds",     "truncation_quantile",
                                   "alpha",   "output",     "horizon"};
  if (mode == RunMode::Simulate) {
    allowed.insert("replicates");
    allowed.insert("scenarios");
    allowed.insert("oracle_mc_reps");
  }
  if (mode == RunMode::Survival) allowed.insert("band_replicates");
  detail::check_keys(j, allowed, "config");

  RunConfig c;
  c.mode = mode;
  if (!j.contains("seed")) throw config_error("config requires a seed");
  c.seed = j.at("seed").get<std::uint64_t>();
  c.nuisance.seed = c.seed;

  if (j.contains("data") == j.contains("dgp"))
    throw config_error("config needs exactly one of data or dgp");
  if (j.contains("data")) {
    const Json& d = j.at("data");
    c.schema = detail::parse_schema(d, "data");
    if (!d.contains("path")) throw config_error("data needs a path");
    c.data_path = d.at("path").get<std::string>();
  } else {
    c.dgp = detail::parse_dgp(j.at("dgp"));
    c.n = j.value("n", 0);
    if (c.n < 1) throw config_error("dgp source requires n >= 1");
  }

  if (!j.contains("policy")) throw config_error("config requires a policy");
  c.policy_text = j.at("policy").get<std::string>();
  if (j.contains("policy_b")) c.policy_b_text = j.at("policy_b").get<std::string>();
  if (j.contains("contrast")) {
    const std::string ct = j.at("contrast").get<std::string>();
    if (ct == "difference") c.contrast = ContrastType::Difference;
    else if (ct == "ratio") c.contrast = ContrastType::Ratio;
    else throw config_error("contrast must be difference or ratio");
  }
  c.policy_seed = j.value("policy_seed", c.seed ^ 0x9e3779b9ULL);

  if (j.contains("estimators")) {
    c.estimators.clear();
    for (const auto& e : detail::string_list(j.at("estimators"), "estimators"))
      c.estimators.push_back(parse_estimator(e));
    if (c.estimators.empty()) throw config_error("estimators must not be empty");
  }

  if (j.contains("learners")) {
    detail::check_keys(j.at("learners"), {"outcome", "ratio"}, "learners");
    if (j.at("learners").contains("outcome"))
      c.nuisance.outcome_learners =
          detail::parse_learner_list(j.at("learners").at("outcome"), "learners.outcome");
    if (j.at("learners").contains("ratio"))
      c.nuisance.ratio_learners =
          detail::parse_learner_list(j.at("learners").at("ratio"), "learners.ratio");
  }
  if (j.contains("folds")) {
    detail::check_keys(j.at("folds"), {"cross_fit", "cv"}, "folds");
    c.nuisance.cross_fit_folds = j.at("folds").value("cross_fit", 5);
    c.nuisance.cv_folds = j.at("folds").value("cv", 5);
  }
  c.nuisance.truncation_quantile = j.value("truncation_quantile", 1.0);
  c.nuisance.alpha = j.value("alpha", 0.05);
  c.output = j.value("output", std::string("."));
  c.horizon = j.value("horizon", -1);

  if (mode == RunMode::Simulate) {
    c.replicates = j.value("replicates", 1);
    c.oracle_mc_reps = j.value("oracle_mc_reps", 200000);
    if (j.contains("scenarios")) {
      for (std::size_t i = 0; i < j.at("scenarios").size(); ++i)
        c.scenarios.push_back(detail::parse_scenario(j.at("scenarios")[i],
                                                     "scenarios[" + std::to_string(i) + "]"));
    }
    if (c.scenarios.empty()) c.scenarios.push_back(Scenario{"all-correct", {}, {}});
  }
  if (mode == RunMode::Survival) c.band_replicates = j.value("band_replicates", 2000);
  return c;
}

inline RunConfig load_run_config(const std::string& path, RunMode mode) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file " + path);
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw config_error(std::string("config parse error in ") + path + ": " + e.what());
  }
  return parse_run_config(j, mode);
}

}  // namespace lmtp
