#pragma once

#include <Eigen/Dense>
#include <vector>

#include "longric/kernel.hpp"

namespace longric {

struct SvmTrainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// RBF-SVM in dual form: f(x) = sum_i dual_coef_i k(sv_i, x) + bias,
// dual_coef_i = alpha_i y_i with y in {-1,+1}, 0 <= alpha_i <= C.
struct SvmDualModel {
  Eigen::MatrixXd support_vectors;  // one row per support vector
  Eigen::VectorXd dual_coef;
  double bias = 0.0;
  GaussianKernel kernel{1.0};
  double C = 1.0;
  int iterations = 0;
  bool converged = true;
};

// SMO with maximal-violating-pair working-set selection on the dual.
// Labels are {0,1}; mapped internally to {-1,+1}.
SvmDualModel train_svm(const Eigen::MatrixXd& X, const std::vector<int>& y,
                       double C, double sigma, double tol = 1e-3);

double decision_value(const SvmDualModel& model, const Eigen::VectorXd& x);

// Gradient of decision_value with respect to x.
Eigen::VectorXd decision_grad(const SvmDualModel& model,
                              const Eigen::VectorXd& x);

// Max KKT violation of the model over its training set (for verification).
double kkt_max_violation(const SvmDualModel& model, const Eigen::MatrixXd& X,
                         const std::vector<int>& y);

}  // namespace longric
