#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "longric/kernel.hpp"
#include "longric/metrics.hpp"
#include "longric/platt.hpp"
#include "longric/svm.hpp"

using namespace longric;

TEST_CASE("gaussian kernel matches scalar loop") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss;
  for (int rep = 0; rep < 100; ++rep) {
    int p = 1 + int(rng() % 20);
    Eigen::VectorXd a(p), b(p);
    for (int j = 0; j < p; ++j) {
      a(j) = gauss(rng);
      b(j) = gauss(rng);
    }
    double sigma = 0.2 + 2.0 * std::uniform_real_distribution<double>()(rng);
    GaussianKernel k{sigma};
    double ss = 0.0;
    for (int j = 0; j < p; ++j) ss += (a(j) - b(j)) * (a(j) - b(j));
    double expected = std::exp(-ss / (2.0 * sigma * sigma));
    CHECK(k.eval(a, b) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("kernel gradient wrt second argument matches finite differences") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss;
  for (int rep = 0; rep < 100; ++rep) {
    int p = 1 + int(rng() % 10);
    Eigen::VectorXd a(p), b(p);
    for (int j = 0; j < p; ++j) {
      a(j) = gauss(rng);
      b(j) = gauss(rng);
    }
    GaussianKernel k{0.7};
    Eigen::VectorXd g = k.grad_wrt_second(a, b);
    Eigen::VectorXd fd = testutil::finite_diff(
        [&](const Eigen::VectorXd& x) { return k.eval(a, x); }, b);
    CHECK((g - fd).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("svm decision value matches naive loop and satisfies KKT") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> gauss;
  int n = 60, p = 3;
  Eigen::MatrixXd X(n, p);
  std::vector<int> y;
  for (int i = 0; i < n; ++i) {
    double shift = i < n / 2 ? -1.0 : 1.0;
    for (int j = 0; j < p; ++j) X(i, j) = shift + gauss(rng);
    y.push_back(i < n / 2 ? 0 : 1);
  }
  SvmDualModel model = train_svm(X, y, 1.0, 1.0);
  CHECK(model.converged);
  CHECK(kkt_max_violation(model, X, y) <= 1e-3);

  for (int rep = 0; rep < 50; ++rep) {
    Eigen::VectorXd x(p);
    for (int j = 0; j < p; ++j) x(j) = gauss(rng);
    double naive = model.bias;
    for (Eigen::Index i = 0; i < model.dual_coef.size(); ++i)
      naive += model.dual_coef(i) *
               model.kernel.eval(model.support_vectors.row(i), x);
    CHECK(decision_value(model, x) == doctest::Approx(naive).epsilon(1e-12));
    Eigen::VectorXd fd = testutil::finite_diff(
        [&](const Eigen::VectorXd& z) { return decision_value(model, z); }, x);
    CHECK((decision_grad(model, x) - fd).cwiseAbs().maxCoeff() < 1e-5);
  }
}

TEST_CASE("svm dual objective matches independent qp solver") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> gauss;
  for (int rep = 0; rep < 3; ++rep) {
    int n = 30, p = 2;
    Eigen::MatrixXd X(n, p);
    std::vector<int> y;
    for (int i = 0; i < n; ++i) {
      double shift = i < n / 2 ? -0.8 : 0.8;
      for (int j = 0; j < p; ++j) X(i, j) = shift + gauss(rng);
      y.push_back(i < n / 2 ? 0 : 1);
    }
    double C = 1.0, sigma = 1.0;
    SvmDualModel model = train_svm(X, y, C, sigma);

    GaussianKernel k{sigma};
    Eigen::MatrixXd K(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) K(i, j) = k.eval(X.row(i), X.row(j));

    // rebuild the full alpha vector by matching support vector rows
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    for (Eigen::Index s = 0; s < model.dual_coef.size(); ++s) {
      for (int i = 0; i < n; ++i) {
        if ((model.support_vectors.row(s) - X.row(i)).cwiseAbs().maxCoeff() <
                1e-14 &&
            alpha(i) == 0.0) {
          alpha(i) = std::abs(model.dual_coef(s));
          break;
        }
      }
    }
    double ours = testutil::dual_objective_of(K, y, alpha);
    double ref = testutil::reference_dual_objective(K, y, C);
    CHECK(std::abs(ours - ref) <= 1e-4 * std::max(1.0, std::abs(ref)));
  }
}

TEST_CASE("svm separates two moons") {
  auto data = testutil::two_moons(150, 0.15, 5);
  SvmDualModel model = train_svm(data.X, data.y, 10.0, 0.3);
  int correct = 0;
  for (int i = 0; i < data.X.rows(); ++i) {
    int pred = decision_value(model, data.X.row(i)) >= 0.0 ? 1 : 0;
    if (pred == data.y[i]) ++correct;
  }
  CHECK(double(correct) / data.X.rows() >= 0.95);
}

TEST_CASE("platt fit recovers generating parameters") {
  std::mt19937_64 rng(47);
  std::uniform_real_distribution<double> unif;
  std::normal_distribution<double> gauss;
  double A = -1.7, B = 0.4;
  int n = 10000;
  Eigen::VectorXd s(n);
  std::vector<int> y;
  for (int i = 0; i < n; ++i) {
    s(i) = 2.5 * gauss(rng);
    double p = 1.0 / (1.0 + std::exp(A * s(i) + B));
    y.push_back(unif(rng) < p ? 1 : 0);
  }
  PlattParams fit = fit_platt(s, y);
  CHECK(std::abs(fit.a - A) < 0.1 * std::abs(A));
  CHECK(std::abs(fit.b - B) < 0.1 * std::abs(A));  // scale of b error vs slope
}

TEST_CASE("calibrated probability composes sigmoid with decision value") {
  auto data = testutil::two_moons(80, 0.2, 9);
  CalibratedClassifier clf = train_calibrated(data.X, data.y, 1.0, 0.5);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss;
  for (int rep = 0; rep < 100; ++rep) {
    Eigen::VectorXd x(2);
    x << gauss(rng), gauss(rng);
    double s = decision_value(clf.svm, x);
    double manual = 1.0 / (1.0 + std::exp(clf.platt_a * s + clf.platt_b));
    CHECK(predict_proba(clf, x) == doctest::Approx(manual).epsilon(1e-12));
  }
}

TEST_CASE("probability gradient matches finite differences on random models") {
  std::mt19937_64 rng(61);
  std::normal_distribution<double> gauss;
  int checked = 0;
  for (int rep = 0; rep < 25 && checked < 500; ++rep) {
    int p = 2 + int(rng() % 19);  // p <= 20
    int n = 40;
    Eigen::MatrixXd X(n, p);
    std::vector<int> y;
    for (int i = 0; i < n; ++i) {
      double shift = i < n / 2 ? -0.7 : 0.7;
      for (int j = 0; j < p; ++j) X(i, j) = shift + gauss(rng);
      y.push_back(i < n / 2 ? 0 : 1);
    }
    CalibratedClassifier clf = train_calibrated(X, y, 1.0, 1.5);
    for (int probe = 0; probe < 20; ++probe, ++checked) {
      Eigen::VectorXd x(p);
      for (int j = 0; j < p; ++j) x(j) = gauss(rng);
      Eigen::VectorXd fd = testutil::finite_diff(
          [&](const Eigen::VectorXd& z) { return predict_proba(clf, z); }, x);
      CHECK((grad_proba(clf, x) - fd).cwiseAbs().maxCoeff() < 1e-5);
    }
  }
  CHECK(checked >= 500);
}
