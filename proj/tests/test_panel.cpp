#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <map>

#include "lmtp/panel.hpp"

using namespace lmtp;

namespace {

PanelSchema two_period_schema(bool censoring = false) {
  PanelSchema s;
  s.covariates = {{"l_0"}, {"l_1"}};
  s.exposures = {"a_0", "a_1"};
  s.outcome = "y";
  if (censoring) s.censoring = {"c_0", "c_1"};
  return s;
}

PanelDataset tiny_uncensored() {
  // three fully observed units
  std::map<std::string, std::vector<double>> cols;
  cols["l_0"] = {0, 1, 1};
  cols["a_0"] = {0, 1, 0};
  cols["l_1"] = {1, 1, 0};
  cols["a_1"] = {1, 0, 0};
  cols["y"] = {0.5, 1.0, 0.0};
  return PanelDataset::from_columns(two_period_schema(), {"u0", "u1", "u2"}, cols);
}

}  // namespace

TEST_CASE("from_columns builds a wide panel") {
  const PanelDataset d = tiny_uncensored();
  CHECK(d.n_units() == 3);
  CHECK(d.horizon() == 1);
  CHECK_FALSE(d.has_censoring());
  CHECK_FALSE(d.is_survival());
  CHECK(d.exposure(1, 0) == 1.0);
  CHECK(d.outcome_min() == 0.0);
  CHECK(d.outcome_max() == 1.0);
}

TEST_CASE("history columns follow time order") {
  const PanelDataset d = tiny_uncensored();
  CHECK(d.history_columns(0) == std::vector<std::string>{"l_0"});
  CHECK(d.history_columns(1) == std::vector<std::string>{"l_0", "a_0", "l_1"});
  const HistoryView h = d.history_at(1, 1);
  CHECK(h.values == std::vector<double>{1, 1, 1});
}

TEST_CASE("censoring must be monotone") {
  std::map<std::string, std::vector<double>> cols;
  cols["l_0"] = {0};
  cols["a_0"] = {1};
  cols["c_0"] = {0};
  cols["l_1"] = {kNaN};
  cols["a_1"] = {kNaN};
  cols["c_1"] = {1};  // re-entry after dropout
  cols["y"] = {kNaN};
  CHECK_THROWS_AS(PanelDataset::from_columns(two_period_schema(true), {"u"}, cols),
                  data_error);
}

TEST_CASE("observed cells must be consistent with censoring") {
  auto cols = std::map<std::string, std::vector<double>>{
      {"l_0", {0, 0}}, {"a_0", {1, 1}}, {"c_0", {0, 1}},
      {"l_1", {kNaN, 1}}, {"a_1", {kNaN, 0}}, {"c_1", {kNaN, 1}}, {"y", {kNaN, 1}}};

  SECTION("valid monotone dropout passes") {
    const PanelDataset d =
        PanelDataset::from_columns(two_period_schema(true), {"u0", "u1"}, cols);
    CHECK_FALSE(d.observed_through(0, 1));
    CHECK(d.observed_through(1, 2));
  }
  SECTION("exposure recorded after censoring is rejected") {
    cols["a_1"][0] = 1.0;
    CHECK_THROWS_AS(
        PanelDataset::from_columns(two_period_schema(true), {"u0", "u1"}, cols),
        data_error);
  }
  SECTION("missing exposure before censoring is rejected") {
    cols["a_0"][1] = kNaN;
    CHECK_THROWS_AS(
        PanelDataset::from_columns(two_period_schema(true), {"u0", "u1"}, cols),
        data_error);
  }
}

TEST_CASE("covariate gaps are LOCF-imputed with an indicator") {
  auto cols = std::map<std::string, std::vector<double>>{
      {"l_0", {0.7, 0.2}}, {"a_0", {1, 0}}, {"l_1", {kNaN, 1}},
      {"a_1", {0, 1}}, {"y", {1, 0}}};
  const PanelDataset d =
      PanelDataset::from_columns(two_period_schema(), {"u0", "u1"}, cols);
  CHECK(d.column("l_1")[0] == 0.7);
  REQUIRE(d.has_column("l_1_miss"));
  CHECK(d.column("l_1_miss")[0] == 1.0);
  CHECK(d.column("l_1_miss")[1] == 0.0);
  bool noted = false;
  for (const auto& n : d.validation().notes)
    if (n.find("LOCF") != std::string::npos) noted = true;
  CHECK(noted);
  // the indicator joins the time-1 covariate list
  const auto h1 = d.history_columns(1);
  CHECK(std::find(h1.begin(), h1.end(), "l_1_miss") != h1.end());
}

TEST_CASE("baseline covariate gap has nothing to carry forward") {
  auto cols = std::map<std::string, std::vector<double>>{
      {"l_0", {kNaN}}, {"a_0", {1}}, {"l_1", {1}}, {"a_1", {0}}, {"y", {1}}};
  CHECK_THROWS_AS(PanelDataset::from_columns(two_period_schema(), {"u"}, cols),
                  data_error);
}

TEST_CASE("survival outcomes are validated") {
  PanelSchema s;
  s.covariates = {{"l_0"}, {"l_1"}};
  s.exposures = {"a_0", "a_1"};
  s.censoring = {"c_0", "c_1"};
  s.survival_outcomes = {"y_0", "y_1"};
  auto cols = std::map<std::string, std::vector<double>>{
      {"l_0", {0, 1}}, {"a_0", {1, 0}}, {"c_0", {1, 1}}, {"y_0", {0, 1}},
      {"l_1", {1, 1}}, {"a_1", {0, 0}}, {"c_1", {1, 1}}, {"y_1", {1, 1}}};

  SECTION("monotone events pass; helpers read them back") {
    const PanelDataset d = PanelDataset::from_columns(s, {"u0", "u1"}, cols);
    CHECK(d.is_survival());
    CHECK_FALSE(d.event_by(0, -1));
    CHECK_FALSE(d.event_by(0, 0));
    CHECK(d.event_by(0, 1));
    CHECK(d.event_by(1, 0));
    CHECK(d.outcome_at_horizon(0, 1) == 0.0);
    CHECK(d.outcome_at_horizon(0, 2) == 1.0);
    CHECK(d.outcome_min() == 0.0);
    CHECK(d.outcome_max() == 1.0);
  }
  SECTION("a recovered event is rejected") {
    cols["y_1"][1] = 0.0;
    CHECK_THROWS_AS(PanelDataset::from_columns(s, {"u0", "u1"}, cols), data_error);
  }
  SECTION("non-binary event indicator is rejected") {
    cols["y_0"][0] = 0.5;
    CHECK_THROWS_AS(PanelDataset::from_columns(s, {"u0", "u1"}, cols), data_error);
  }
}

TEST_CASE("exposure values are checked against the declared kind") {
  const PanelDataset d = tiny_uncensored();
  CHECK_THROWS_AS(d.with_exposure_replaced(0, {0.5, 1, 0}), data_error);
  const PanelDataset e = d.with_exposure_replaced(0, {1, 1, 1});
  CHECK(e.exposure(0, 0) == 1.0);
  CHECK(d.exposure(0, 0) == 0.0);  // source untouched
  CHECK_THROWS_AS(d.with_exposure_replaced(5, {0, 0, 0}), data_error);
  CHECK_THROWS_AS(d.with_exposure_replaced(0, {0, 0}), data_error);
}

TEST_CASE("csv round trip preserves the panel") {
  const PanelDataset d = tiny_uncensored();
  const std::string path = "test_panel_roundtrip.csv";
  d.save_csv(path);
  PanelSchema s = two_period_schema();
  s.unit_column = "unit";
  const PanelDataset back = PanelDataset::load_csv(path, s);
  CHECK(d.logically_equal(back));
  CHECK(back.unit_ids()[1] == "u1");
  std::remove(path.c_str());
}

TEST_CASE("csv loader rejects malformed input") {
  const std::string path = "test_panel_bad.csv";
  {
    std::ofstream out(path);
    out << "l_0,a_0,l_1,a_1,y\n0,1,1,0,banana\n";
  }
  CHECK_THROWS_AS(PanelDataset::load_csv(path, two_period_schema()), data_error);
  {
    std::ofstream out(path);
    out << "l_0,a_0,l_1,a_1\n0,1,1,0\n";  // outcome column absent
  }
  CHECK_THROWS_AS(PanelDataset::load_csv(path, two_period_schema()), data_error);
  std::remove(path.c_str());
  CHECK_THROWS_AS(PanelDataset::load_csv("does_not_exist.csv", two_period_schema()),
                  data_error);
}

TEST_CASE("schema shape errors are caught") {
  auto cols = std::map<std::string, std::vector<double>>{
      {"l_0", {0}}, {"a_0", {1}}, {"y", {1}}};
  PanelSchema s;
  s.covariates = {{"l_0"}};
  s.exposures = {};
  s.outcome = "y";
  CHECK_THROWS_AS(PanelDataset::from_columns(s, {"u"}, cols), data_error);
  s.exposures = {"a_0"};
  s.outcome = "";
  CHECK_THROWS_AS(PanelDataset::from_columns(s, {"u"}, cols), data_error);
}
