#include "longric/nadaraya.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace longric {

namespace {

// log-weights with the max exponent subtracted before exponentiation
Eigen::VectorXd stable_weights(const IndirectModel& model,
                               const Eigen::VectorXd& query, double* raw_sum) {
  const Eigen::Index n = model.train_inputs.rows();
  const double s2 = 2.0 * model.kernel.sigma * model.kernel.sigma;
  Eigen::VectorXd log_w(n);
  for (Eigen::Index i = 0; i < n; ++i)
    log_w(i) = -(model.train_inputs.row(i).transpose() - query).squaredNorm() / s2;
  double m = log_w.maxCoeff();
  Eigen::VectorXd w = (log_w.array() - m).exp();
  // raw (unshifted) weight mass, used only for the underflow guard
  *raw_sum = std::exp(m) * w.sum();
  return w;
}

Eigen::VectorXd assemble_query(const IndirectModel& model,
                               const Eigen::VectorXd& x_u,
                               const Eigen::VectorXd& x_d) {
  if (x_d.size() != model.dim_d ||
      x_u.size() + x_d.size() != model.train_inputs.cols())
    throw std::invalid_argument("indirect estimator: dimension mismatch");
  Eigen::VectorXd q(model.train_inputs.cols());
  q << x_d, x_u;
  return q;
}

}  // namespace

IndirectModel fit_indirect(const Eigen::MatrixXd& x_d_rows,
                           const Eigen::MatrixXd& x_u_rows,
                           const Eigen::MatrixXd& x_i_rows, double sigma) {
  if (x_d_rows.rows() != x_u_rows.rows() || x_d_rows.rows() != x_i_rows.rows())
    throw std::invalid_argument("fit_indirect: row count mismatch");
  if (x_d_rows.rows() == 0)
    throw std::invalid_argument("fit_indirect: need at least one training row");
  IndirectModel m;
  m.train_inputs.resize(x_d_rows.rows(), x_d_rows.cols() + x_u_rows.cols());
  m.train_inputs << x_d_rows, x_u_rows;
  m.train_targets = x_i_rows;
  m.kernel = GaussianKernel(sigma);
  m.dim_d = x_d_rows.cols();
  return m;
}

Eigen::VectorXd estimate_indirect(const IndirectModel& model,
                                  const Eigen::VectorXd& x_u,
                                  const Eigen::VectorXd& x_d) {
  Eigen::VectorXd q = assemble_query(model, x_u, x_d);
  double raw_sum = 0.0;
  Eigen::VectorXd w = stable_weights(model, q, &raw_sum);
  if (raw_sum < 1e-300) {
    // far-field query: nearest-neighbor fallback
    Eigen::Index best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < model.train_inputs.rows(); ++i) {
      double d = (model.train_inputs.row(i).transpose() - q).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    return model.train_targets.row(best).transpose();
  }
  return model.train_targets.transpose() * w / w.sum();
}

Eigen::MatrixXd grad_indirect_wrt_direct(const IndirectModel& model,
                                         const Eigen::VectorXd& x_u,
                                         const Eigen::VectorXd& x_d) {
  Eigen::VectorXd q = assemble_query(model, x_u, x_d);
  double raw_sum = 0.0;
  Eigen::VectorXd w = stable_weights(model, q, &raw_sum);
  const Eigen::Index ni = model.train_targets.cols();
  const Eigen::Index nd = model.dim_d;
  if (raw_sum < 1e-300) return Eigen::MatrixXd::Zero(ni, nd);

  double wsum = w.sum();
  Eigen::VectorXd g = model.train_targets.transpose() * w / wsum;  // current output
  const double s2 = model.kernel.sigma * model.kernel.sigma;

  // d g / d x_d = sum_i (dw_i/dx_d) (t_i - g) / sum w,
  // dw_i/dx_d = w_i (input_i,d - x_d) / sigma^2
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(ni, nd);
  for (Eigen::Index i = 0; i < model.train_inputs.rows(); ++i) {
    Eigen::VectorXd dwd =
        w(i) / s2 *
        (model.train_inputs.row(i).head(nd).transpose() - x_d);
    jac += (model.train_targets.row(i).transpose() - g) * dwd.transpose();
  }
  return jac / wsum;
}

double select_indirect_bandwidth(const Eigen::MatrixXd& x_d_rows,
                                 const Eigen::MatrixXd& x_u_rows,
                                 const Eigen::MatrixXd& x_i_rows, int folds,
                                 unsigned long long seed) {
  const std::vector<double> grid = {0.05, 0.1, 0.2, 0.5, 1.0, 2.0};
  const Eigen::Index n = x_d_rows.rows();
  if (n < 2) return grid[grid.size() / 2];
  std::vector<int> fold(n);
  {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed ^ 0x51ab2edc0fbb1765ULL);
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index k = 0; k < n; ++k)
      fold[static_cast<std::size_t>(order[k])] = static_cast<int>(k) % folds;
  }
  double best_sigma = grid.front();
  double best_mse = std::numeric_limits<double>::infinity();
  for (double sigma : grid) {
    double sse = 0.0;
    long count = 0;
    for (int f = 0; f < folds; ++f) {
      std::vector<Eigen::Index> tr, te;
      for (Eigen::Index i = 0; i < n; ++i)
        (fold[static_cast<std::size_t>(i)] == f ? te : tr).push_back(i);
      if (tr.empty() || te.empty()) continue;
      Eigen::MatrixXd d(tr.size(), x_d_rows.cols()), u(tr.size(), x_u_rows.cols()),
          t(tr.size(), x_i_rows.cols());
      for (std::size_t k = 0; k < tr.size(); ++k) {
        d.row(static_cast<Eigen::Index>(k)) = x_d_rows.row(tr[k]);
        u.row(static_cast<Eigen::Index>(k)) = x_u_rows.row(tr[k]);
        t.row(static_cast<Eigen::Index>(k)) = x_i_rows.row(tr[k]);
      }
      IndirectModel m = fit_indirect(d, u, t, sigma);
      for (Eigen::Index i : te) {
        Eigen::VectorXd pred = estimate_indirect(m, x_u_rows.row(i).transpose(),
                                                 x_d_rows.row(i).transpose());
        sse += (pred - x_i_rows.row(i).transpose()).squaredNorm();
        ++count;
      }
    }
    double mse = count > 0 ? sse / count : std::numeric_limits<double>::infinity();
    if (mse < best_mse) {
      best_mse = mse;
      best_sigma = sigma;
    }
  }
  return best_sigma;
}

}  // namespace longric
