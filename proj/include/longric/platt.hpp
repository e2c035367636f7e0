#pragma once

#include <Eigen/Dense>
#include <vector>

#include "longric/svm.hpp"

namespace longric {

struct PlattParams {
  double a = 0.0;  // slope on the decision value (negative for the usual
                   // positive association between decision and class 1)
  double b = 0.0;
};

// Fits P(y=1|s) = 1 / (1 + exp(a s + b)) by Newton iterations on the
// regularized negative log-likelihood with Platt's smoothed targets.
PlattParams fit_platt(const Eigen::VectorXd& decisions,
                      const std::vector<int>& y, int max_iter = 100);

struct CalibratedClassifier {
  SvmDualModel svm;
  double platt_a = 0.0;
  double platt_b = 0.0;
};

double predict_proba(const CalibratedClassifier& clf, const Eigen::VectorXd& x);
Eigen::VectorXd grad_proba(const CalibratedClassifier& clf,
                           const Eigen::VectorXd& x);

// Trains the SVM on all of (X, y) and fits Platt parameters on decision
// values obtained from cv_folds-fold cross-validation over (X, y).
CalibratedClassifier train_calibrated(const Eigen::MatrixXd& X,
                                      const std::vector<int>& y, double C,
                                      double sigma, double tol = 1e-3,
                                      int cv_folds = 3,
                                      unsigned long long seed = 0);

}  // namespace longric
