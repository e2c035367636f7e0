#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace longric {

// Gaussian kernel k(a,b) = exp(-||a-b||^2 / (2 sigma^2)).
struct GaussianKernel {
  double sigma = 1.0;

  explicit GaussianKernel(double s = 1.0) : sigma(s) {
    if (!(sigma > 0.0)) throw std::invalid_argument("kernel sigma must be > 0");
  }

  double eval(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    if (a.size() != b.size())
      throw std::invalid_argument("kernel eval: length mismatch");
    double d2 = (a - b).squaredNorm();
    return std::exp(-d2 / (2.0 * sigma * sigma));
  }

  // Gradient of eval(a, b) with respect to b.
  Eigen::VectorXd grad_wrt_second(const Eigen::VectorXd& a,
                                  const Eigen::VectorXd& b) const {
    return eval(a, b) / (sigma * sigma) * (a - b);
  }
};

}  // namespace longric
