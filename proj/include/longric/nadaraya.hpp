#pragma once

#include <Eigen/Dense>

#include "longric/kernel.hpp"

namespace longric {

// Nadaraya-Watson estimator for the indirectly-mutable features:
// phi(x_U, x_D) = sum_i w_i t_i / sum_i w_i with Gaussian weights over
// stored [x_D, x_U] training rows.
struct IndirectModel {
  Eigen::MatrixXd train_inputs;   // rows of [x_D, x_U]
  Eigen::MatrixXd train_targets;  // rows of x_I
  GaussianKernel kernel{1.0};

  Eigen::Index dim_d = 0;  // leading columns of train_inputs are x_D
};

IndirectModel fit_indirect(const Eigen::MatrixXd& x_d_rows,
                           const Eigen::MatrixXd& x_u_rows,
                           const Eigen::MatrixXd& x_i_rows, double sigma);

// Bandwidth selection by k-fold cross-validated MSE over a log grid.
double select_indirect_bandwidth(const Eigen::MatrixXd& x_d_rows,
                                 const Eigen::MatrixXd& x_u_rows,
                                 const Eigen::MatrixXd& x_i_rows,
                                 int folds = 5, unsigned long long seed = 0);

Eigen::VectorXd estimate_indirect(const IndirectModel& model,
                                  const Eigen::VectorXd& x_u,
                                  const Eigen::VectorXd& x_d);

// Jacobian of estimate_indirect with respect to x_D, shape |I| x |D|.
Eigen::MatrixXd grad_indirect_wrt_direct(const IndirectModel& model,
                                         const Eigen::VectorXd& x_u,
                                         const Eigen::VectorXd& x_d);

}  // namespace longric
