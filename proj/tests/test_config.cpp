#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "lmtp/config.hpp"

using namespace lmtp;

namespace {

Json minimal_estimate() {
  return Json{{"seed", 7},
              {"dgp", "point-treatment"},
              {"n", 100},
              {"policy", "static 1"}};
}

}  // namespace

TEST_CASE("a minimal estimate config parses with defaults") {
  const RunConfig c = parse_run_config(minimal_estimate(), RunMode::Estimate);
  CHECK(c.seed == 7);
  REQUIRE(c.dgp);
  CHECK(c.dgp->id == "point-treatment");
  CHECK(c.n == 100);
  CHECK(c.policy_text == "static 1");
  CHECK(c.estimators == std::vector<EstimatorKind>{EstimatorKind::Tmle});
  CHECK(c.nuisance.cross_fit_folds == 5);
  CHECK(c.nuisance.alpha == 0.05);
  CHECK(c.nuisance.seed == 7);
  CHECK(c.contrast == ContrastType::Difference);
  CHECK(c.exposure_kind() == ExposureKind::Binary);
  CHECK(c.policy_seed == (7ULL ^ 0x9e3779b9ULL));
}

TEST_CASE("the seed is mandatory and data/dgp are exclusive") {
  Json j = minimal_estimate();
  j.erase("seed");
  CHECK_THROWS_AS(parse_run_config(j, RunMode::Estimate), config_error);

  j = minimal_estimate();
  j["data"] = Json{{"path", "x.csv"},
                   {"covariates", Json::array({Json::array({"l"})})},
                   {"exposures", Json::array({"a"})},
                   {"outcome", "y"}};
  CHECK_THROWS_AS(parse_run_config(j, RunMode::Estimate), config_error);  // both

  j.erase("dgp");
  j.erase("n");
  const RunConfig c = parse_run_config(j, RunMode::Estimate);
  CHECK(c.data_path == "x.csv");
  CHECK(c.schema.outcome == "y");

  j.erase("data");
  CHECK_THROWS_AS(parse_run_config(j, RunMode::Estimate), config_error);  // neither
}

TEST_CASE("unknown keys are rejected everywhere") {
  Json j = minimal_estimate();
  j["surprise"] = 1;
  CHECK_THROWS_AS(parse_run_config(j, RunMode::Estimate), config_error);

  j = minimal_estimate();
  j["learners"] = Json{{"outcome", Json::array({Json{{"family", "gaussian-glm"},
                                                     {"bandwidth", 3}}})}};
  CHECK_THROWS_AS(parse_run_config(j, RunMode::Estimate), config_error);

  j = minimal_estimate();
  j["folds"] = Json{{"cross_fit", 2}, {"bootstrap", 9}};
  CHECK_THROWS_AS(parse_run_config(j, RunMode::Estimate), config_error);

  // simulate-only keys are rejected in estimate mode
  j = minimal_estimate();
  j["replicates"] = 10;
  CHECK_THROWS_AS(parse_run_config(j, RunMode::Estimate), config_error);
  CHECK_NOTHROW(parse_run_config(j, RunMode::Simulate));
}

TEST_CASE("estimators, learners, and folds parse") {
  Json j = minimal_estimate();
  j["estimators"] = Json::array({"gcomp", "ipw", "tmle", "sdr"});
  j["learners"] = Json{
      {"outcome", Json::array({Json{{"family", "binomial-glm"}, {"saturated", true}}})},
      {"ratio", Json::array({Json{{"family", "tree"}, {"max_depth", 2}, {"min_leaf", 5}},
                             Json{{"family", "knn"}, {"k", 7}}})}};
  j["folds"] = Json{{"cross_fit", 2}, {"cv", 3}};
  j["truncation_quantile"] = 0.99;
  j["alpha"] = 0.1;
  const RunConfig c = parse_run_config(j, RunMode::Estimate);
  CHECK(c.estimators.size() == 4);
  REQUIRE(c.nuisance.outcome_learners.size() == 1);
  CHECK(c.nuisance.outcome_learners[0].saturated);
  REQUIRE(c.nuisance.ratio_learners.size() == 2);
  CHECK(c.nuisance.ratio_learners[0].family == Family::Tree);
  CHECK(c.nuisance.ratio_learners[1].k == 7);
  CHECK(c.nuisance.cross_fit_folds == 2);
  CHECK(c.nuisance.cv_folds == 3);
  CHECK(c.nuisance.truncation_quantile == 0.99);
  CHECK(c.nuisance.alpha == 0.1);

  j["estimators"] = Json::array({"propensity-matching"});
  CHECK_THROWS_AS(parse_run_config(j, RunMode::Estimate), config_error);
  j["estimators"] = Json::array();
  CHECK_THROWS_AS(parse_run_config(j, RunMode::Estimate), config_error);
}

TEST_CASE("policies, contrasts, and horizons parse") {
  Json j = minimal_estimate();
  j["policy_b"] = "identity";
  j["contrast"] = "ratio";
  j["policy_seed"] = 99;
  j["horizon"] = 1;
  const RunConfig c = parse_run_config(j, RunMode::Estimate);
  CHECK(c.policy_b_text == "identity");
  CHECK(c.contrast == ContrastType::Ratio);
  CHECK(c.policy_seed == 99);
  CHECK(c.horizon == 1);

  j["contrast"] = "log-odds";
  CHECK_THROWS_AS(parse_run_config(j, RunMode::Estimate), config_error);
  j.erase("contrast");
  j.erase("policy");
  CHECK_THROWS_AS(parse_run_config(j, RunMode::Estimate), config_error);
}

TEST_CASE("inline dgp definitions parse laws") {
  Json j = minimal_estimate();
  j["dgp"] = Json{
      {"id", "inline-test"},
      {"covariates", Json::array({Json::array({"l"})})},
      {"exposures", Json::array({"a"})},
      {"outcome", "y"},
      {"laws", Json{{"l", Json{{"kind", "bernoulli-identity"}, {"intercept", 0.5}}},
                    {"a", Json{{"kind", "bernoulli-logit"},
                               {"intercept", -1.0},
                               {"terms", Json{{"l", 2.0}}}}},
                    {"y", Json{{"kind", "normal"}, {"sigma", 2.0},
                               {"terms", Json{{"a", 1.0}}}}}}}};
  const RunConfig c = parse_run_config(j, RunMode::Estimate);
  REQUIRE(c.dgp);
  CHECK(c.dgp->id == "inline-test");
  CHECK(c.dgp->laws.at("a").kind == DgpLaw::BernoulliLogit);
  CHECK(c.dgp->laws.at("y").sigma == 2.0);
  CHECK_FALSE(c.dgp->discrete());

  j["dgp"]["laws"].erase("y");
  CHECK_THROWS_AS(parse_run_config(j, RunMode::Estimate), config_error);
  j["n"] = 0;
  CHECK_THROWS_AS(parse_run_config(j, RunMode::Estimate), config_error);
}

TEST_CASE("simulate mode defaults to the all-correct scenario") {
  Json j = minimal_estimate();
  const RunConfig c = parse_run_config(j, RunMode::Simulate);
  REQUIRE(c.scenarios.size() == 1);
  CHECK(c.scenarios[0].id == "all-correct");
  CHECK(c.replicates == 1);
  CHECK(c.oracle_mc_reps == 200000);

  j["scenarios"] = Json::array(
      {Json{{"id", "broken"},
            {"outcome_omit", Json::array({Json::array({"l"})})}}});
  const RunConfig c2 = parse_run_config(j, RunMode::Simulate);
  REQUIRE(c2.scenarios.size() == 1);
  CHECK(c2.scenarios[0].id == "broken");
  CHECK(c2.scenarios[0].outcome_omit == std::vector<std::vector<std::string>>{{"l"}});

  j["scenarios"] = Json::array({Json{{"id", "x"}, {"drop", Json::array()}}});
  CHECK_THROWS_AS(parse_run_config(j, RunMode::Simulate), config_error);
}

TEST_CASE("load_run_config reads files and reports parse errors") {
  const std::string path = "test_config_tmp.json";
  {
    std::ofstream out(path);
    out << minimal_estimate().dump();
  }
  const RunConfig c = load_run_config(path, RunMode::Estimate);
  CHECK(c.seed == 7);
  {
    std::ofstream out(path);
    out << "{ not json";
  }
  CHECK_THROWS_AS(load_run_config(path, RunMode::Estimate), config_error);
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_run_config("missing.json", RunMode::Estimate), config_error);
}
