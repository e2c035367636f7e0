#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "longric/cohort.hpp"

namespace longric {

enum class ImputeMethod { CarryForward, Knn, Ridge, Logistic, Cart };

std::string impute_method_name(ImputeMethod m);
ImputeMethod impute_method_from_name(const std::string& name);

struct ImputerParams {
  int knn_k = 5;
  double ridge_lambda = 1.0;
  int cart_max_depth = 6;
  int cart_min_leaf = 20;
  int logistic_max_iter = 200;
};

struct CartNode {
  int feature = -1;        // -1 marks a leaf
  double threshold = 0.0;  // go left when x(feature) <= threshold
  int left = -1, right = -1;
  double value = 0.0;
};

// Per-feature estimator psi_m: predicts one absent feature from the
// features present, trained on visit-1 data.
struct ImputerModel {
  std::string target_feature;
  ImputeMethod method = ImputeMethod::CarryForward;
  FeatureKind target_kind = FeatureKind::Continuous;
  ImputerParams params;

  Eigen::VectorXd weights;       // ridge / logistic (last entry = intercept)
  Eigen::MatrixXd knn_inputs;    // knn stored data
  Eigen::VectorXd knn_targets;
  std::vector<CartNode> tree;    // cart
};

ImputerModel fit_imputer(ImputeMethod method, const Eigen::MatrixXd& X,
                         const Eigen::VectorXd& target, FeatureKind kind,
                         const ImputerParams& params = {},
                         const std::string& target_name = "");

// carry_forward ignores x_available and returns *prev_value; the learned
// methods ignore prev_value.
double impute(const ImputerModel& model, const Eigen::VectorXd& x_available,
              std::optional<double> prev_value = std::nullopt);

struct ImputerComparisonRow {
  std::string feature;
  std::string method;
  std::string metric;  // "mse" or "auc"
  double value = 0.0;
  int skipped_folds = 0;
};

// Experiment-3 harness: for each target feature known at visit 2, learned
// methods are trained on visit-1 rows outside the fold and evaluated
// against the observed visit-2 value of the fold's ids; carry_forward
// predicts the id's visit-1 value.
std::vector<ImputerComparisonRow> compare_imputers(
    const LongitudinalCohort& cohort, const std::vector<std::string>& targets,
    const std::vector<ImputeMethod>& methods, int folds,
    unsigned long long seed, const ImputerParams& params = {});

}  // namespace longric
