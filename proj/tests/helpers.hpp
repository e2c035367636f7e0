#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace testutil {

// Central finite differences of a scalar function of a vector.
inline Eigen::VectorXd finite_diff(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, double h = 1e-6) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Eigen::VectorXd xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    g(j) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

struct TwoMoons {
  Eigen::MatrixXd X;
  std::vector<int> y;
};

inline TwoMoons two_moons(int n_per_class, double noise,
                          unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, noise);
  std::uniform_real_distribution<double> unif(0.0, M_PI);
  TwoMoons out;
  out.X.resize(2 * n_per_class, 2);
  for (int i = 0; i < n_per_class; ++i) {
    double t = unif(rng);
    out.X(i, 0) = std::cos(t) + gauss(rng);
    out.X(i, 1) = std::sin(t) + gauss(rng);
    out.y.push_back(0);
  }
  for (int i = 0; i < n_per_class; ++i) {
    double t = unif(rng);
    out.X(n_per_class + i, 0) = 1.0 - std::cos(t) + gauss(rng);
    out.X(n_per_class + i, 1) = 0.5 - std::sin(t) + gauss(rng);
    out.y.push_back(1);
  }
  return out;
}

// Projection of a onto {0 <= a <= C, a . y01pm = 0} (y entries +-1) by
// bisection on the equality multiplier.
inline Eigen::VectorXd project_dual_box_eq(const Eigen::VectorXd& a,
                                           const Eigen::VectorXd& ypm,
                                           double C) {
  auto clipped = [&](double nu) {
    Eigen::VectorXd out(a.size());
    for (Eigen::Index i = 0; i < a.size(); ++i)
      out(i) = std::clamp(a(i) - nu * ypm(i), 0.0, C);
    return out;
  };
  auto residual = [&](double nu) { return clipped(nu).dot(ypm); };
  double lo = -1.0, hi = 1.0;
  while (residual(lo) < 0.0) lo *= 2.0;
  while (residual(hi) > 0.0) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    (residual(mid) > 0.0 ? lo : hi) = mid;
  }
  return clipped(0.5 * (lo + hi));
}

// Independent reference solver for the SVM dual
//   max sum a_i - 1/2 sum_ij a_i a_j y_i y_j K_ij
// by projected gradient ascent. Returns the dual objective value.
inline double reference_dual_objective(const Eigen::MatrixXd& K,
                                       const std::vector<int>& y01, double C,
                                       int iters = 200000, double step = 1e-3) {
  Eigen::Index n = K.rows();
  Eigen::VectorXd ypm(n);
  for (Eigen::Index i = 0; i < n; ++i) ypm(i) = y01[i] == 1 ? 1.0 : -1.0;
  Eigen::MatrixXd Q = K.cwiseProduct(ypm * ypm.transpose());
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
  for (int it = 0; it < iters; ++it) {
    Eigen::VectorXd grad = Eigen::VectorXd::Ones(n) - Q * a;
    a = project_dual_box_eq(a + step * grad, ypm, C);
  }
  return a.sum() - 0.5 * a.dot(Q * a);
}

inline double dual_objective_of(const Eigen::MatrixXd& K,
                                const std::vector<int>& y01,
                                const Eigen::VectorXd& alpha) {
  Eigen::Index n = K.rows();
  Eigen::VectorXd ypm(n);
  for (Eigen::Index i = 0; i < n; ++i) ypm(i) = y01[i] == 1 ? 1.0 : -1.0;
  Eigen::MatrixXd Q = K.cwiseProduct(ypm * ypm.transpose());
  return alpha.sum() - 0.5 * alpha.dot(Q * alpha);
}

}  // namespace testutil
