#include "longric/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace longric {

namespace {

// Kernel rows computed on demand; full matrix kept when it fits comfortably.
class KernelCache {
 public:
  KernelCache(const Eigen::MatrixXd& X, const GaussianKernel& k)
      : X_(X), k_(k), n_(static_cast<int>(X.rows())) {
    if (n_ <= 3000) {
      full_.resize(n_, n_);
      for (int i = 0; i < n_; ++i) {
        for (int j = 0; j <= i; ++j) {
          double v = k_.eval(X_.row(i).transpose(), X_.row(j).transpose());
          full_(i, j) = v;
          full_(j, i) = v;
        }
      }
      has_full_ = true;
    }
  }

  // by value: callers hold two rows at once
  Eigen::VectorXd row(int i) {
    if (has_full_) return full_.row(i).transpose();
    auto it = cache_.find(i);
    if (it != cache_.end()) return it->second;
    if (cache_.size() >= 512) cache_.clear();
    Eigen::VectorXd r(n_);
    for (int j = 0; j < n_; ++j)
      r(j) = k_.eval(X_.row(i).transpose(), X_.row(j).transpose());
    return cache_.emplace(i, std::move(r)).first->second;
  }

 private:
  const Eigen::MatrixXd& X_;
  GaussianKernel k_;
  int n_;
  bool has_full_ = false;
  Eigen::MatrixXd full_;
  std::unordered_map<int, Eigen::VectorXd> cache_;
};

}  // namespace

SvmDualModel train_svm(const Eigen::MatrixXd& X, const std::vector<int>& y,
                       double C, double sigma, double tol) {
  const int n = static_cast<int>(X.rows());
  if (n < 2 || static_cast<int>(y.size()) != n)
    throw SvmTrainError("train_svm: need n >= 2 with matching labels");
  if (!(C > 0.0)) throw SvmTrainError("train_svm: C must be > 0");

  Eigen::VectorXd yv(n);
  bool has_pos = false, has_neg = false;
  for (int i = 0; i < n; ++i) {
    yv(i) = y[i] == 1 ? 1.0 : -1.0;
    (y[i] == 1 ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg)
    throw SvmTrainError("train_svm: both classes must be present");

  GaussianKernel kernel(sigma);
  KernelCache cache(X, kernel);

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd grad = Eigen::VectorXd::Constant(n, -1.0);

  const double tau = 1e-12;
  const long max_iter = std::max(10L * n, 1000L);
  long iter = 0;
  bool converged = false;

  for (; iter < max_iter; ++iter) {
    // maximal violating pair
    int i = -1, j = -1;
    double m_up = -std::numeric_limits<double>::infinity();
    double m_low = std::numeric_limits<double>::infinity();
    for (int t = 0; t < n; ++t) {
      bool up = (yv(t) > 0 && alpha(t) < C) || (yv(t) < 0 && alpha(t) > 0);
      bool low = (yv(t) < 0 && alpha(t) < C) || (yv(t) > 0 && alpha(t) > 0);
      double val = -yv(t) * grad(t);
      if (up && val > m_up) {
        m_up = val;
        i = t;
      }
      if (low && val < m_low) {
        m_low = val;
        j = t;
      }
    }
    if (i < 0 || j < 0 || m_up - m_low < tol) {
      converged = true;
      break;
    }

    Eigen::VectorXd Ki = cache.row(i);
    Eigen::VectorXd Kj = cache.row(j);
    double old_ai = alpha(i), old_aj = alpha(j);

    if (yv(i) != yv(j)) {
      // Q_ij = y_i y_j K_ij, so the pair curvature is K_ii + K_jj - 2 K_ij
      // in kernel terms for both label arrangements
      double quad = Ki(i) + Kj(j) - 2.0 * Ki(j);
      double delta = (-grad(i) - grad(j)) / std::max(quad, tau);
      double diff = alpha(i) - alpha(j);
      alpha(i) += delta;
      alpha(j) += delta;
      if (diff > 0 && alpha(j) < 0) {
        alpha(j) = 0;
        alpha(i) = diff;
      } else if (diff <= 0 && alpha(i) < 0) {
        alpha(i) = 0;
        alpha(j) = -diff;
      }
      if (diff > 0 && alpha(i) > C) {
        alpha(i) = C;
        alpha(j) = C - diff;
      } else if (diff <= 0 && alpha(j) > C) {
        alpha(j) = C;
        alpha(i) = C + diff;
      }
    } else {
      double quad = Ki(i) + Kj(j) - 2.0 * Ki(j);
      double delta = (grad(i) - grad(j)) / std::max(quad, tau);
      double sum = alpha(i) + alpha(j);
      alpha(i) -= delta;
      alpha(j) += delta;
      if (sum > C && alpha(i) > C) {
        alpha(i) = C;
        alpha(j) = sum - C;
      } else if (sum <= C && alpha(j) < 0) {
        alpha(j) = 0;
        alpha(i) = sum;
      }
      if (sum > C && alpha(j) > C) {
        alpha(j) = C;
        alpha(i) = sum - C;
      } else if (sum <= C && alpha(i) < 0) {
        alpha(i) = 0;
        alpha(j) = sum;
      }
    }

    double dai = alpha(i) - old_ai;
    double daj = alpha(j) - old_aj;
    for (int t = 0; t < n; ++t)
      grad(t) += yv(t) * (yv(i) * Ki(t) * dai + yv(j) * Kj(t) * daj);
  }

  if (!converged)
    throw SvmTrainError("train_svm: no convergence after " +
                        std::to_string(iter) + " iterations");

  // bias from free support vectors, midpoint fallback
  double b = 0.0;
  int n_free = 0;
  double m_up = -std::numeric_limits<double>::infinity();
  double m_low = std::numeric_limits<double>::infinity();
  for (int t = 0; t < n; ++t) {
    double val = -yv(t) * grad(t);
    bool up = (yv(t) > 0 && alpha(t) < C) || (yv(t) < 0 && alpha(t) > 0);
    bool low = (yv(t) < 0 && alpha(t) < C) || (yv(t) > 0 && alpha(t) > 0);
    if (up) m_up = std::max(m_up, val);
    if (low) m_low = std::min(m_low, val);
    if (alpha(t) > tau && alpha(t) < C - tau) {
      b += val;
      ++n_free;
    }
  }
  b = n_free > 0 ? b / n_free : 0.5 * (m_up + m_low);

  int n_sv = 0;
  for (int t = 0; t < n; ++t)
    if (alpha(t) > tau) ++n_sv;

  SvmDualModel model;
  model.support_vectors.resize(n_sv, X.cols());
  model.dual_coef.resize(n_sv);
  int s = 0;
  for (int t = 0; t < n; ++t) {
    if (alpha(t) > tau) {
      model.support_vectors.row(s) = X.row(t);
      model.dual_coef(s) = alpha(t) * yv(t);
      ++s;
    }
  }
  model.bias = b;
  model.kernel = kernel;
  model.C = C;
  model.iterations = static_cast<int>(iter);
  model.converged = converged;
  return model;
}

double decision_value(const SvmDualModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.support_vectors.cols() &&
      model.support_vectors.rows() > 0)
    throw std::invalid_argument("decision_value: dimension mismatch");
  double s = model.bias;
  for (Eigen::Index i = 0; i < model.support_vectors.rows(); ++i)
    s += model.dual_coef(i) *
         model.kernel.eval(model.support_vectors.row(i).transpose(), x);
  return s;
}

Eigen::VectorXd decision_grad(const SvmDualModel& model,
                              const Eigen::VectorXd& x) {
  if (x.size() != model.support_vectors.cols() &&
      model.support_vectors.rows() > 0)
    throw std::invalid_argument("decision_grad: dimension mismatch");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
  for (Eigen::Index i = 0; i < model.support_vectors.rows(); ++i)
    g += model.dual_coef(i) * model.kernel.grad_wrt_second(
                                  model.support_vectors.row(i).transpose(), x);
  return g;
}

double kkt_max_violation(const SvmDualModel& model, const Eigen::MatrixXd& X,
                         const std::vector<int>& y) {
  // reconstruct alpha per training point by matching rows against the SVs
  double worst = 0.0;
  for (Eigen::Index t = 0; t < X.rows(); ++t) {
    double yt = y[static_cast<std::size_t>(t)] == 1 ? 1.0 : -1.0;
    double alpha = 0.0;
    for (Eigen::Index s = 0; s < model.support_vectors.rows(); ++s) {
      if ((model.support_vectors.row(s) - X.row(t)).norm() < 1e-14 &&
          model.dual_coef(s) * yt > 0) {
        alpha = std::abs(model.dual_coef(s));
        break;
      }
    }
    double margin = yt * decision_value(model, X.row(t).transpose());
    double viol = 0.0;
    if (alpha <= 1e-10)
      viol = std::max(0.0, 1.0 - margin);
    else if (alpha >= model.C - 1e-10)
      viol = std::max(0.0, margin - 1.0);
    else
      viol = std::abs(margin - 1.0);
    worst = std::max(worst, viol);
  }
  return worst;
}

}  // namespace longric
