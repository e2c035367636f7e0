#include "longric/platt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace longric {

PlattParams fit_platt(const Eigen::VectorXd& decisions,
                      const std::vector<int>& y, int max_iter) {
  const int n = static_cast<int>(decisions.size());
  if (n == 0 || static_cast<int>(y.size()) != n)
    throw std::invalid_argument("fit_platt: size mismatch");
  for (int i = 0; i < n; ++i)
    if (!std::isfinite(decisions(i)))
      throw std::invalid_argument("fit_platt: non-finite decision value");

  int n_pos = 0, n_neg = 0;
  for (int v : y) (v == 1 ? n_pos : n_neg)++;
  if (n_pos == 0 || n_neg == 0)
    throw std::invalid_argument("fit_platt: both classes must be present");

  // Platt target smoothing
  const double t_pos = (n_pos + 1.0) / (n_pos + 2.0);
  const double t_neg = 1.0 / (n_neg + 2.0);
  Eigen::VectorXd t(n);
  for (int i = 0; i < n; ++i) t(i) = y[i] == 1 ? t_pos : t_neg;

  // Newton with backtracking (Lin, Lin & Weng's numerically stable form)
  double A = 0.0;
  double B = std::log((n_neg + 1.0) / (n_pos + 1.0));
  const double min_step = 1e-10, sigma_reg = 1e-12, eps = 1e-5;

  auto objective = [&](double a, double b) {
    double f = 0.0;
    for (int i = 0; i < n; ++i) {
      double fApB = a * decisions(i) + b;
      if (fApB >= 0)
        f += t(i) * fApB + std::log1p(std::exp(-fApB));
      else
        f += (t(i) - 1.0) * fApB + std::log1p(std::exp(fApB));
    }
    return f;
  };

  double fval = objective(A, B);
  int it = 0;
  for (; it < max_iter; ++it) {
    double h11 = sigma_reg, h22 = sigma_reg, h21 = 0.0, g1 = 0.0, g2 = 0.0;
    for (int i = 0; i < n; ++i) {
      double fApB = A * decisions(i) + B;
      double p, q;
      if (fApB >= 0) {
        p = std::exp(-fApB) / (1.0 + std::exp(-fApB));
        q = 1.0 / (1.0 + std::exp(-fApB));
      } else {
        p = 1.0 / (1.0 + std::exp(fApB));
        q = std::exp(fApB) / (1.0 + std::exp(fApB));
      }
      double d2 = p * q;
      h11 += decisions(i) * decisions(i) * d2;
      h22 += d2;
      h21 += decisions(i) * d2;
      double d1 = t(i) - p;
      g1 += decisions(i) * d1;
      g2 += d1;
    }
    if (std::abs(g1) < eps && std::abs(g2) < eps) break;

    double det = h11 * h22 - h21 * h21;
    double dA = -(h22 * g1 - h21 * g2) / det;
    double dB = -(-h21 * g1 + h11 * g2) / det;
    double gd = g1 * dA + g2 * dB;

    double step = 1.0;
    while (step >= min_step) {
      double new_f = objective(A + step * dA, B + step * dB);
      if (new_f < fval + 1e-4 * step * gd) {
        A += step * dA;
        B += step * dB;
        fval = new_f;
        break;
      }
      step /= 2.0;
    }
    if (step < min_step) break;
  }
  if (it >= max_iter)
    throw std::runtime_error("fit_platt: no convergence after " +
                             std::to_string(max_iter) + " Newton steps");
  return {A, B};
}

double predict_proba(const CalibratedClassifier& clf,
                     const Eigen::VectorXd& x) {
  double s = decision_value(clf.svm, x);
  double fApB = clf.platt_a * s + clf.platt_b;
  if (fApB >= 0) {
    double e = std::exp(-fApB);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(fApB));
}

Eigen::VectorXd grad_proba(const CalibratedClassifier& clf,
                           const Eigen::VectorXd& x) {
  double p = predict_proba(clf, x);
  return p * (1.0 - p) * (-clf.platt_a) * decision_grad(clf.svm, x);
}

CalibratedClassifier train_calibrated(const Eigen::MatrixXd& X,
                                      const std::vector<int>& y, double C,
                                      double sigma, double tol, int cv_folds,
                                      unsigned long long seed) {
  const int n = static_cast<int>(X.rows());
  CalibratedClassifier clf;
  clf.svm = train_svm(X, y, C, sigma, tol);

  // cross-validated decision values for the sigmoid fit; in-sample decisions
  // are biased toward +-1
  Eigen::VectorXd dec(n);
  std::vector<int> fold(n);
  {
    // stratified round-robin assignment after a seeded shuffle per class
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<int> pos, neg;
    for (int i = 0; i < n; ++i) (y[i] == 1 ? pos : neg).push_back(i);
    std::shuffle(pos.begin(), pos.end(), rng);
    std::shuffle(neg.begin(), neg.end(), rng);
    int f = 0;
    for (int i : pos) fold[i] = f++ % cv_folds;
    for (int i : neg) fold[i] = f++ % cv_folds;
  }
  for (int f = 0; f < cv_folds; ++f) {
    std::vector<int> train_idx, test_idx;
    for (int i = 0; i < n; ++i)
      (fold[i] == f ? test_idx : train_idx).push_back(i);
    bool both = false, saw_pos = false, saw_neg = false;
    for (int i : train_idx) (y[i] == 1 ? saw_pos : saw_neg) = true;
    both = saw_pos && saw_neg;
    if (!both || train_idx.size() < 2) {
      for (int i : test_idx)
        dec(i) = decision_value(clf.svm, X.row(i).transpose());
      continue;
    }
    Eigen::MatrixXd Xt(train_idx.size(), X.cols());
    std::vector<int> yt(train_idx.size());
    for (std::size_t k = 0; k < train_idx.size(); ++k) {
      Xt.row(static_cast<Eigen::Index>(k)) = X.row(train_idx[k]);
      yt[k] = y[static_cast<std::size_t>(train_idx[k])];
    }
    SvmDualModel sub = train_svm(Xt, yt, C, sigma, tol);
    for (int i : test_idx) dec(i) = decision_value(sub, X.row(i).transpose());
  }

  PlattParams pp = fit_platt(dec, y);
  clf.platt_a = pp.a;
  clf.platt_b = pp.b;
  return clf;
}

}  // namespace longric
