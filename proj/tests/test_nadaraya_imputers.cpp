#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "longric/imputers.hpp"
#include "longric/metrics.hpp"
#include "longric/nadaraya.hpp"

using namespace longric;

namespace {

IndirectModel random_model(std::mt19937_64& rng, int n, int dim_d, int dim_u,
                           int dim_i, double sigma) {
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd xd(n, dim_d), xu(n, dim_u), xi(n, dim_i);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < dim_d; ++j) xd(i, j) = gauss(rng);
    for (int j = 0; j < dim_u; ++j) xu(i, j) = gauss(rng);
    for (int j = 0; j < dim_i; ++j) xi(i, j) = gauss(rng);
  }
  return fit_indirect(xd, xu, xi, sigma);
}

}  // namespace

TEST_CASE("kernel regression estimate matches naive double loop") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> gauss;
  for (int rep = 0; rep < 50; ++rep) {
    int dim_d = 1 + int(rng() % 4), dim_u = 1 + int(rng() % 4);
    int dim_i = 1 + int(rng() % 3);
    IndirectModel m = random_model(rng, 30, dim_d, dim_u, dim_i, 0.8);
    Eigen::VectorXd xd(dim_d), xu(dim_u);
    for (int j = 0; j < dim_d; ++j) xd(j) = gauss(rng);
    for (int j = 0; j < dim_u; ++j) xu(j) = gauss(rng);

    Eigen::VectorXd q(dim_d + dim_u);
    q << xd, xu;
    Eigen::VectorXd num = Eigen::VectorXd::Zero(dim_i);
    double den = 0.0;
    for (int i = 0; i < m.train_inputs.rows(); ++i) {
      double w = m.kernel.eval(m.train_inputs.row(i), q);
      num += w * m.train_targets.row(i).transpose();
      den += w;
    }
    Eigen::VectorXd expected = num / den;
    Eigen::VectorXd got = estimate_indirect(m, xu, xd);
    CHECK((got - expected).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("kernel regression jacobian matches finite differences") {
  std::mt19937_64 rng(19);
  std::normal_distribution<double> gauss;
  for (int rep = 0; rep < 50; ++rep) {
    int dim_d = 1 + int(rng() % 10), dim_u = 1 + int(rng() % 4);
    int dim_i = 1 + int(rng() % 3);
    IndirectModel m = random_model(rng, 40, dim_d, dim_u, dim_i, 1.0);
    Eigen::VectorXd xd(dim_d), xu(dim_u);
    for (int j = 0; j < dim_d; ++j) xd(j) = gauss(rng);
    for (int j = 0; j < dim_u; ++j) xu(j) = gauss(rng);

    Eigen::MatrixXd J = grad_indirect_wrt_direct(m, xu, xd);
    for (int out = 0; out < dim_i; ++out) {
      Eigen::VectorXd fd = testutil::finite_diff(
          [&](const Eigen::VectorXd& z) {
            return estimate_indirect(m, xu, z)(out);
          },
          xd);
      CHECK((J.row(out).transpose() - fd).cwiseAbs().maxCoeff() < 1e-5);
    }
  }
}

TEST_CASE("ridge prediction equals explicit dot product") {
  std::mt19937_64 rng(29);
  std::normal_distribution<double> gauss;
  int n = 100, p = 5;
  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd t(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) X(i, j) = gauss(rng);
    t(i) = X.row(i).sum() + 0.1 * gauss(rng);
  }
  ImputerModel m = fit_imputer(ImputeMethod::Ridge, X, t,
                               FeatureKind::Continuous, {}, "t");
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::VectorXd x(p);
    for (int j = 0; j < p; ++j) x(j) = gauss(rng);
    double expected = m.weights.head(p).dot(x) + m.weights(p);
    CHECK(impute(m, x) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("logistic imputer beats carry-forward on logistic-generated target") {
  std::mt19937_64 rng(37);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif;
  int n = 800, p = 4;
  Eigen::MatrixXd X(n, p), Xtest(n, p);
  Eigen::VectorXd t(n), ttest(n), prev(n);
  Eigen::VectorXd w(p);
  w << 1.5, -2.0, 0.8, 1.1;
  auto draw = [&](Eigen::MatrixXd& M, Eigen::VectorXd& target) {
    for (int i = 0; i < M.rows(); ++i) {
      for (int j = 0; j < p; ++j) M(i, j) = gauss(rng);
      double pr = 1.0 / (1.0 + std::exp(-(w.dot(M.row(i)) - 0.2)));
      target(i) = unif(rng) < pr ? 1.0 : 0.0;
    }
  };
  draw(X, t);
  draw(Xtest, ttest);
  for (int i = 0; i < n; ++i) prev(i) = unif(rng) < 0.5 ? 1.0 : 0.0;

  ImputerModel lg =
      fit_imputer(ImputeMethod::Logistic, X, t, FeatureKind::Binary, {}, "t");
  std::vector<double> scores_lg, scores_cf;
  std::vector<int> labels;
  ImputerModel cf;
  cf.method = ImputeMethod::CarryForward;
  cf.target_kind = FeatureKind::Binary;
  for (int i = 0; i < n; ++i) {
    scores_lg.push_back(impute(lg, Xtest.row(i)));
    scores_cf.push_back(impute(cf, Xtest.row(i), prev(i)));
    labels.push_back(int(ttest(i)));
  }
  double auc_lg = auc(scores_lg, labels);
  double auc_cf = auc(scores_cf, labels);
  CHECK(auc_lg > 0.9);
  CHECK(auc_lg > auc_cf);
}

TEST_CASE("knn imputer recovers a locally smooth target") {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> gauss;
  int n = 400, p = 2;
  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd t(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = gauss(rng);
    X(i, 1) = gauss(rng);
    t(i) = std::sin(X(i, 0)) + 0.5 * X(i, 1);
  }
  ImputerModel m =
      fit_imputer(ImputeMethod::Knn, X, t, FeatureKind::Continuous, {}, "t");
  double err = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    Eigen::VectorXd x(p);
    x << gauss(rng), gauss(rng);
    double truth = std::sin(x(0)) + 0.5 * x(1);
    err += std::abs(impute(m, x) - truth);
  }
  CHECK(err / 100.0 < 0.25);
}

TEST_CASE("cart imputer splits a step function") {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> unif;
  int n = 500, p = 3;
  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd t(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) X(i, j) = unif(rng);
    t(i) = X(i, 1) > 0.5 ? 3.0 : -3.0;
  }
  ImputerModel m =
      fit_imputer(ImputeMethod::Cart, X, t, FeatureKind::Continuous, {}, "t");
  Eigen::VectorXd lo(p), hi(p);
  lo << 0.5, 0.1, 0.5;
  hi << 0.5, 0.9, 0.5;
  CHECK(impute(m, lo) < 0.0);
  CHECK(impute(m, hi) > 0.0);
}
