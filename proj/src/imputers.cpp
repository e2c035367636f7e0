#include "longric/imputers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "longric/metrics.hpp"
#include "longric/rng.hpp"

namespace longric {

std::string impute_method_name(ImputeMethod m) {
  switch (m) {
    case ImputeMethod::CarryForward: return "carry_forward";
    case ImputeMethod::Knn: return "knn";
    case ImputeMethod::Ridge: return "ridge";
    case ImputeMethod::Logistic: return "logistic";
    case ImputeMethod::Cart: return "cart";
  }
  return "?";
}

ImputeMethod impute_method_from_name(const std::string& name) {
  if (name == "carry_forward" || name == "carry") return ImputeMethod::CarryForward;
  if (name == "knn") return ImputeMethod::Knn;
  if (name == "ridge") return ImputeMethod::Ridge;
  if (name == "logistic") return ImputeMethod::Logistic;
  if (name == "cart") return ImputeMethod::Cart;
  throw std::invalid_argument("unknown imputer method: " + name);
}

namespace {

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& X) {
  Eigen::MatrixXd A(X.rows(), X.cols() + 1);
  A << X, Eigen::VectorXd::Ones(X.rows());
  return A;
}

Eigen::VectorXd fit_ridge(const Eigen::MatrixXd& X, const Eigen::VectorXd& t,
                          double lambda) {
  if (!(lambda > 0.0))
    throw std::invalid_argument("ridge requires lambda > 0");
  Eigen::MatrixXd A = with_intercept(X);
  Eigen::MatrixXd G = A.transpose() * A;
  G.diagonal().array() += lambda;
  return G.ldlt().solve(A.transpose() * t);
}

Eigen::VectorXd fit_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& t,
                             int max_iter) {
  Eigen::MatrixXd A = with_intercept(X);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(A.cols());
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd z = A * w;
    Eigen::VectorXd p = (1.0 / (1.0 + (-z.array()).exp())).matrix();
    Eigen::VectorXd g = A.transpose() * (p - t);
    if (g.lpNorm<Eigen::Infinity>() < 1e-8) break;
    Eigen::VectorXd s = (p.array() * (1.0 - p.array())).matrix();
    Eigen::MatrixXd H = A.transpose() * s.asDiagonal() * A;
    H.diagonal().array() += 1e-8;  // keeps Newton defined under separation
    w -= H.ldlt().solve(g);
  }
  return w;
}

double predict_cart(const std::vector<CartNode>& tree,
                    const Eigen::VectorXd& x) {
  int node = 0;
  while (tree[static_cast<std::size_t>(node)].feature >= 0) {
    const CartNode& nd = tree[static_cast<std::size_t>(node)];
    node = x(nd.feature) <= nd.threshold ? nd.left : nd.right;
  }
  return tree[static_cast<std::size_t>(node)].value;
}

struct CartBuilder {
  const Eigen::MatrixXd& X;
  const Eigen::VectorXd& t;
  bool gini;
  int max_depth;
  int min_leaf;
  std::vector<CartNode> nodes;

  double impurity(double sum, double sum_sq, double n) const {
    if (n <= 0) return 0.0;
    if (gini) {
      double p = sum / n;
      return n * 2.0 * p * (1.0 - p);
    }
    return sum_sq - sum * sum / n;  // n * variance
  }

  int build(std::vector<int> idx, int depth) {
    double sum = 0.0, sum_sq = 0.0;
    for (int i : idx) {
      sum += t(i);
      sum_sq += t(i) * t(i);
    }
    double n = static_cast<double>(idx.size());
    CartNode leaf;
    leaf.value = n > 0 ? sum / n : 0.0;

    int self = static_cast<int>(nodes.size());
    nodes.push_back(leaf);
    if (depth >= max_depth || static_cast<int>(idx.size()) < 2 * min_leaf)
      return self;

    double parent_imp = impurity(sum, sum_sq, n);
    double best_gain = 1e-12;
    int best_feat = -1;
    double best_thr = 0.0;

    for (int f = 0; f < X.cols(); ++f) {
      std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        return X(a, f) < X(b, f);
      });
      double ls = 0.0, lss = 0.0;
      for (std::size_t k = 0; k + 1 < idx.size(); ++k) {
        int i = idx[k];
        ls += t(i);
        lss += t(i) * t(i);
        double ln = static_cast<double>(k + 1);
        if (ln < min_leaf || n - ln < min_leaf) continue;
        if (X(idx[k + 1], f) <= X(i, f)) continue;  // tied values
        double gain = parent_imp - impurity(ls, lss, ln) -
                      impurity(sum - ls, sum_sq - lss, n - ln);
        if (gain > best_gain) {
          best_gain = gain;
          best_feat = f;
          best_thr = 0.5 * (X(i, f) + X(idx[k + 1], f));
        }
      }
    }
    if (best_feat < 0) return self;

    std::vector<int> left, right;
    for (int i : idx)
      (X(i, best_feat) <= best_thr ? left : right).push_back(i);
    nodes[static_cast<std::size_t>(self)].feature = best_feat;
    nodes[static_cast<std::size_t>(self)].threshold = best_thr;
    int l = build(std::move(left), depth + 1);
    int r = build(std::move(right), depth + 1);
    nodes[static_cast<std::size_t>(self)].left = l;
    nodes[static_cast<std::size_t>(self)].right = r;
    return self;
  }
};

}  // namespace

ImputerModel fit_imputer(ImputeMethod method, const Eigen::MatrixXd& X,
                         const Eigen::VectorXd& target, FeatureKind kind,
                         const ImputerParams& params,
                         const std::string& target_name) {
  if (method == ImputeMethod::Logistic && kind != FeatureKind::Binary)
    throw std::invalid_argument("logistic imputer requires a binary target");
  if (method == ImputeMethod::Ridge && kind != FeatureKind::Continuous)
    throw std::invalid_argument("ridge imputer requires a continuous target");

  ImputerModel m;
  m.target_feature = target_name;
  m.method = method;
  m.target_kind = kind;
  m.params = params;

  switch (method) {
    case ImputeMethod::CarryForward:
      break;  // stateless
    case ImputeMethod::Ridge:
      m.weights = fit_ridge(X, target, params.ridge_lambda);
      break;
    case ImputeMethod::Logistic:
      m.weights = fit_logistic(X, target, params.logistic_max_iter);
      break;
    case ImputeMethod::Knn:
      m.knn_inputs = X;
      m.knn_targets = target;
      break;
    case ImputeMethod::Cart: {
      CartBuilder b{X, target, kind == FeatureKind::Binary,
                    params.cart_max_depth, params.cart_min_leaf, {}};
      std::vector<int> idx(X.rows());
      std::iota(idx.begin(), idx.end(), 0);
      b.build(std::move(idx), 0);
      m.tree = std::move(b.nodes);
      break;
    }
  }
  return m;
}

double impute(const ImputerModel& model, const Eigen::VectorXd& x_available,
              std::optional<double> prev_value) {
  switch (model.method) {
    case ImputeMethod::CarryForward:
      if (!prev_value)
        throw std::invalid_argument(
            "carry_forward imputation needs the prior visit value");
      return *prev_value;
    case ImputeMethod::Ridge:
    case ImputeMethod::Logistic: {
      if (x_available.size() + 1 != model.weights.size())
        throw std::invalid_argument("impute: dimension mismatch");
      double z = model.weights.head(x_available.size()).dot(x_available) +
                 model.weights(model.weights.size() - 1);
      if (model.method == ImputeMethod::Ridge) return z;
      return 1.0 / (1.0 + std::exp(-z));
    }
    case ImputeMethod::Knn: {
      if (x_available.size() != model.knn_inputs.cols())
        throw std::invalid_argument("impute: dimension mismatch");
      const Eigen::Index n = model.knn_inputs.rows();
      int k = std::min<int>(model.params.knn_k, static_cast<int>(n));
      std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
      std::iota(order.begin(), order.end(), Eigen::Index{0});
      std::nth_element(order.begin(), order.begin() + (k - 1), order.end(),
                       [&](Eigen::Index a, Eigen::Index b) {
                         double da = (model.knn_inputs.row(a).transpose() -
                                      x_available).squaredNorm();
                         double db = (model.knn_inputs.row(b).transpose() -
                                      x_available).squaredNorm();
                         if (da != db) return da < db;
                         return a < b;  // deterministic tie-break
                       });
      double sum = 0.0;
      for (int i = 0; i < k; ++i)
        sum += model.knn_targets(order[static_cast<std::size_t>(i)]);
      if (model.target_kind == FeatureKind::Binary)
        return sum >= 0.5 * k ? 1.0 : 0.0;  // majority, ties -> 1
      return sum / k;
    }
    case ImputeMethod::Cart:
      return predict_cart(model.tree, x_available);
  }
  throw std::logic_error("impute: unreachable");
}

std::vector<ImputerComparisonRow> compare_imputers(
    const LongitudinalCohort& cohort, const std::vector<std::string>& targets,
    const std::vector<ImputeMethod>& methods, int folds,
    unsigned long long seed, const ImputerParams& params) {
  if (folds < 2) throw std::invalid_argument("compare_imputers: folds >= 2");
  const VisitData& v1 = cohort.visit(1);
  const VisitData& v2 = cohort.visit(2);

  std::vector<ImputerComparisonRow> out;
  for (const auto& target : targets) {
    std::size_t t1 = v1.schema.index_of(target);
    std::size_t t2 = v2.schema.index_of(target);
    FeatureKind kind = v2.schema.at(t2).kind;

    // predictors: features known at visit 2, minus the target itself;
    // aligned via names back into the visit-1 rows
    std::vector<std::size_t> pred_v1, pred_v2;
    for (std::size_t j = 0; j < v2.schema.size(); ++j) {
      if (j == t2) continue;
      pred_v2.push_back(j);
      pred_v1.push_back(v1.schema.index_of(v2.schema.at(j).name));
    }

    for (ImputeMethod method : methods) {
      if (method == ImputeMethod::Logistic && kind != FeatureKind::Binary)
        continue;
      if (method == ImputeMethod::Ridge && kind != FeatureKind::Continuous)
        continue;
      std::vector<double> preds;
      std::vector<double> truth_cont;
      std::vector<int> truth_bin;
      int skipped = 0;

      for (int f = 0; f < folds; ++f) {
        // train on visit-1 rows whose id is outside the fold
        std::vector<const Instance*> train_rows;
        for (const auto& inst : v1.instances)
          if (fold_of(inst.id, folds, seed, "impute-bench") != f)
            train_rows.push_back(&inst);
        ImputerModel model;
        if (method != ImputeMethod::CarryForward) {
          if (train_rows.empty()) {
            ++skipped;
            continue;
          }
          Eigen::MatrixXd X(train_rows.size(), pred_v1.size());
          Eigen::VectorXd t(train_rows.size());
          for (std::size_t r = 0; r < train_rows.size(); ++r) {
            for (std::size_t c = 0; c < pred_v1.size(); ++c)
              X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                  train_rows[r]->values(static_cast<Eigen::Index>(pred_v1[c]));
            t(static_cast<Eigen::Index>(r)) =
                train_rows[r]->values(static_cast<Eigen::Index>(t1));
          }
          try {
            model = fit_imputer(method, X, t, kind, params, target);
          } catch (const std::exception&) {
            ++skipped;
            continue;
          }
        } else {
          model.method = ImputeMethod::CarryForward;
          model.target_kind = kind;
        }

        for (const auto& inst : v2.instances) {
          if (fold_of(inst.id, folds, seed, "impute-bench") != f) continue;
          const Instance* prior = v1.find(inst.id);
          if (!prior) continue;
          Eigen::VectorXd xa(pred_v2.size());
          for (std::size_t c = 0; c < pred_v2.size(); ++c)
            xa(static_cast<Eigen::Index>(c)) =
                inst.values(static_cast<Eigen::Index>(pred_v2[c]));
          double p = impute(model, xa,
                            prior->values(static_cast<Eigen::Index>(t1)));
          preds.push_back(p);
          double actual = inst.values(static_cast<Eigen::Index>(t2));
          truth_cont.push_back(actual);
          truth_bin.push_back(actual >= 0.5 ? 1 : 0);
        }
      }

      ImputerComparisonRow row;
      row.feature = target;
      row.method = impute_method_name(method);
      row.skipped_folds = skipped;
      if (kind == FeatureKind::Binary) {
        row.metric = "auc";
        bool two_class =
            std::count(truth_bin.begin(), truth_bin.end(), 1) > 0 &&
            std::count(truth_bin.begin(), truth_bin.end(), 0) > 0;
        row.value = two_class ? auc(preds, truth_bin) : 0.5;
      } else {
        row.metric = "mse";
        double sse = 0.0;
        for (std::size_t i = 0; i < preds.size(); ++i)
          sse += (preds[i] - truth_cont[i]) * (preds[i] - truth_cont[i]);
        row.value = preds.empty() ? 0.0 : sse / preds.size();
      }
      out.push_back(std::move(row));
    }
  }
  return out;
}

}  // namespace longric
