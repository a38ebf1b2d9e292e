#include <catch2/catch_amalgamated.hpp>

#include "lmtp/learners.hpp"
#include "lmtp/rng.hpp"

using namespace lmtp;

namespace {

DesignMatrix make_design(int n, int p, std::uint64_t seed, bool binary = false) {
  DesignMatrix d;
  d.X.resize(n, p);
  for (int j = 0; j < p; ++j) {
    d.names.push_back("x" + std::to_string(j));
    for (int i = 0; i < n; ++i) {
      const double u = counter_uniform(seed, j, i);
      d.X(i, j) = binary ? (u < 0.5 ? 0.0 : 1.0) : 2.0 * u - 1.0;
    }
  }
  return d;
}

}  // namespace

TEST_CASE("select subsets columns and synthesizes the intercept") {
  DesignMatrix d = make_design(10, 3, 1);
  const DesignMatrix sub = d.select({"x2", "x0"});
  CHECK(sub.p() == 2);
  CHECK(sub.names == std::vector<std::string>{"x2", "x0"});
  CHECK(sub.X.col(0) == d.X.col(2));
  const DesignMatrix icpt = d.select({"(intercept)"});
  CHECK(icpt.X.col(0).minCoeff() == 1.0);
  CHECK(icpt.X.col(0).maxCoeff() == 1.0);
  CHECK_THROWS_AS(d.select({"nope"}), data_error);
}

TEST_CASE("gaussian GLM recovers exact coefficients on noiseless data") {
  const DesignMatrix d = make_design(200, 2, 2);
  Eigen::VectorXd y(200);
  for (int i = 0; i < 200; ++i) y[i] = 1.5 - 2.0 * d.X(i, 0) + 0.75 * d.X(i, 1);
  const FittedModel m = fit_learner(LearnerSpec{Family::GaussianGlm}, d, y);
  const Eigen::VectorXd pred = m.predict(d);
  CHECK((pred - y).lpNorm<Eigen::Infinity>() < 1e-9);
  CHECK_FALSE(m.ridge_fallback);
}

TEST_CASE("singular designs fall back to a tiny ridge") {
  DesignMatrix d = make_design(50, 1, 3);
  d.names.push_back("dup");
  d.X.conservativeResize(50, 2);
  d.X.col(1) = d.X.col(0);  // perfectly collinear
  Eigen::VectorXd y = d.X.col(0);
  const FittedModel m = fit_learner(LearnerSpec{Family::GaussianGlm}, d, y);
  CHECK(m.ridge_fallback);
  CHECK((m.predict(d) - y).lpNorm<Eigen::Infinity>() < 1e-3);
}

TEST_CASE("binomial GLM fits logistic data and accepts fractional targets") {
  const int n = 4000;
  const DesignMatrix d = make_design(n, 1, 4);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    const double p = expit(-0.5 + 1.5 * d.X(i, 0));
    y[i] = counter_uniform(99, 0, i) < p ? 1.0 : 0.0;
  }
  const FittedModel m = fit_learner(LearnerSpec{Family::BinomialGlm}, d, y);
  const auto& g = std::get<detail::GlmFit>(m.fit);
  CHECK(g.coef[0] == Catch::Approx(-0.5).margin(0.15));
  CHECK(g.coef[1] == Catch::Approx(1.5).margin(0.25));

  Eigen::VectorXd frac = Eigen::VectorXd::Constant(n, 0.37);
  const FittedModel mf = fit_learner(LearnerSpec{Family::BinomialGlm}, d, frac);
  CHECK(mf.predict(d).mean() == Catch::Approx(0.37).margin(1e-3));

  Eigen::VectorXd bad = frac;
  bad[0] = 1.2;
  CHECK_THROWS_AS(fit_learner(LearnerSpec{Family::BinomialGlm}, d, bad), numeric_error);
}

TEST_CASE("saturated fits are closed-form cell means") {
  const DesignMatrix d = make_design(500, 2, 5, true);
  Eigen::VectorXd y(500);
  for (int i = 0; i < 500; ++i)
    y[i] = 0.1 + 0.4 * d.X(i, 0) + 0.2 * d.X(i, 1) + 0.01 * counter_normal(6, 0, i);
  LearnerSpec spec{Family::GaussianGlm};
  spec.saturated = true;
  const FittedModel m = fit_learner(spec, d, y);
  // prediction for each row equals the mean of its cell
  std::map<std::pair<double, double>, std::pair<double, int>> cells;
  for (int i = 0; i < 500; ++i) {
    auto& c = cells[{d.X(i, 0), d.X(i, 1)}];
    c.first += y[i];
    c.second += 1;
  }
  const Eigen::VectorXd pred = m.predict(d);
  for (int i = 0; i < 500; ++i) {
    const auto& c = cells[{d.X(i, 0), d.X(i, 1)}];
    CHECK(pred[i] == Catch::Approx(c.first / c.second).margin(1e-12));
  }
  // unseen cells fall back to the global mean
  DesignMatrix unseen;
  unseen.names = d.names;
  unseen.X.resize(1, 2);
  unseen.X << 7.0, 7.0;
  CHECK(m.predict(unseen)[0] == Catch::Approx(y.mean()).margin(1e-12));
}

TEST_CASE("k-NN and trees fit simple structure") {
  const int n = 400;
  const DesignMatrix d = make_design(n, 1, 7);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = d.X(i, 0) > 0 ? 2.0 : -1.0;

  LearnerSpec knn{Family::Knn};
  knn.k = 3;
  const FittedModel mk = fit_learner(knn, d, y);
  int knn_hits = 0;
  const Eigen::VectorXd pk = mk.predict(d);
  for (int i = 0; i < n; ++i)
    if (std::abs(d.X(i, 0)) > 0.05 && std::abs(pk[i] - y[i]) < 1e-9) ++knn_hits;
  CHECK(knn_hits > n * 8 / 10);

  LearnerSpec tree{Family::Tree};
  tree.max_depth = 2;
  tree.min_leaf = 10;
  const FittedModel mt = fit_learner(tree, d, y);
  const Eigen::VectorXd pt = mt.predict(d);
  for (int i = 0; i < n; ++i)
    if (std::abs(d.X(i, 0)) > 0.05) CHECK(pt[i] == Catch::Approx(y[i]).margin(0.05));
}

TEST_CASE("fit_learner input validation") {
  const DesignMatrix d = make_design(10, 1, 8);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(10);
  Eigen::VectorXd w = Eigen::VectorXd::Ones(10);
  w[0] = -1.0;
  CHECK_THROWS_AS(fit_learner(LearnerSpec{Family::GaussianGlm}, d, y, w), numeric_error);
  Eigen::VectorXd short_y = Eigen::VectorXd::Zero(9);
  CHECK_THROWS_AS(fit_learner(LearnerSpec{Family::GaussianGlm}, d, short_y), data_error);
  LearnerSpec bad{Family::Knn};
  bad.k = 0;
  CHECK_THROWS_AS(fit_learner(bad, d, y), config_error);
  LearnerSpec ridge{Family::GaussianGlm};
  ridge.ridge = -1.0;
  CHECK_THROWS_AS(fit_learner(ridge, d, y), config_error);
}

TEST_CASE("fold assignment is deterministic and balanced") {
  const FoldAssignment f1 = make_folds(103, 5, 11);
  const FoldAssignment f2 = make_folds(103, 5, 11);
  CHECK(f1.fold == f2.fold);
  const FoldAssignment f3 = make_folds(103, 5, 12);
  CHECK(f1.fold != f3.fold);
  std::vector<int> counts(5, 0);
  for (int f : f1.fold) ++counts[f];
  for (int c : counts) CHECK((c == 20 || c == 21));
  CHECK_THROWS_AS(make_folds(3, 1, 0), config_error);
  CHECK_THROWS_AS(make_folds(3, 4, 0), config_error);
}

TEST_CASE("superlearner puts nearly all weight on the correct model") {
  const int n = 5000;
  const DesignMatrix d = make_design(n, 2, 13);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i)
    y[i] = 1.0 + 2.0 * d.X(i, 0) - d.X(i, 1) + 0.3 * counter_normal(14, 0, i);

  LearnerSpec right{Family::GaussianGlm};
  LearnerSpec noise{Family::GaussianGlm};
  noise.features = {"(intercept)"};  // intercept-only: ignores the signal
  const auto [weights, model] =
      stack_superlearner({right, noise}, d, y, 5, StackLoss::Squared, 21);
  CHECK(weights.w[0] > 0.9);
  CHECK(weights.w.sum() == Catch::Approx(1.0));
  // the stacked CV loss never exceeds the best single learner's
  const double best = *std::min_element(weights.cv_risk.begin(), weights.cv_risk.end());
  Eigen::VectorXd pred = model.predict(d);
  double mse = 0.0;
  for (int i = 0; i < n; ++i) mse += (pred[i] - y[i]) * (pred[i] - y[i]);
  mse /= n;
  CHECK(mse <= best * 1.05);
}

TEST_CASE("superlearner tolerates a failing candidate") {
  const int n = 200;
  const DesignMatrix d = make_design(n, 1, 15, true);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = counter_uniform(16, 0, i) < 0.4 ? 1.0 : 0.0;
  LearnerSpec ok{Family::BinomialGlm};
  LearnerSpec broken{Family::BinomialGlm};
  broken.features = {"ghost-column"};  // select() throws during CV
  const auto [weights, model] =
      stack_superlearner({broken, ok}, d, y, 4, StackLoss::Log, 17);
  CHECK(weights.w[0] == 0.0);
  CHECK(weights.w[1] == Catch::Approx(1.0));
  CHECK(std::isnan(weights.cv_risk[0]));
  const Eigen::VectorXd p = model.predict(d);
  CHECK(p.mean() == Catch::Approx(0.4).margin(0.1));
}

TEST_CASE("a single learner bypasses the CV stack") {
  const DesignMatrix d = make_design(30, 1, 18);
  Eigen::VectorXd y = d.X.col(0);
  const EnsembleModel m =
      fit_stack({LearnerSpec{Family::GaussianGlm}}, d, y, 5, StackLoss::Squared, 0);
  CHECK(m.weights.w.size() == 1);
  CHECK(m.weights.w[0] == 1.0);
  CHECK((m.predict(d) - y).lpNorm<Eigen::Infinity>() < 1e-9);
}
