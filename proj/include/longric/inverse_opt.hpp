#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "longric/cohort.hpp"
#include "longric/nadaraya.hpp"
#include "longric/platt.hpp"

namespace longric {

// Feasible set for the direct features: box (direction-derived bounds)
// intersected with the budget halfspace c^T I (x - origin) <= B.
// signs entries are +1 (increase only), -1 (decrease only) or 0 (free;
// the budget then charges cost on the absolute change).
struct FeasibleRegion {
  Eigen::VectorXd origin;
  Eigen::VectorXd costs;
  Eigen::VectorXi signs;
  Eigen::VectorXd lower, upper;
  double budget = 0.0;
};

// Builds the region from the schema's direct features and the instance's
// current direct block, with bounds per the direction rule.
FeasibleRegion make_feasible_region(const FeatureSchema& schema,
                                    const Eigen::VectorXd& x_d_origin,
                                    double budget);

double region_cost(const FeasibleRegion& region, const Eigen::VectorXd& x);

// Euclidean projection onto box intersect budget halfspace: clip to the box,
// then bisect on the Lagrange multiplier of the budget if it is violated.
Eigen::VectorXd project(const FeasibleRegion& region, const Eigen::VectorXd& z,
                        double projection_tol = 1e-8);

struct OptimizerConfig {
  int max_iters = 1000;
  double initial_step = 1.0;
  double backtrack_factor = 0.5;
  double armijo_c = 1e-4;
  double rel_tol = 1e-6;
  double projection_tol = 1e-8;
  int restarts = 0;  // extra random feasible starting points
};

// Objective context: fixed immutables, phi for the indirect block (may be
// null when the schema has no indirect features), schema for assembly.
struct ObjectiveContext {
  const CalibratedClassifier* clf = nullptr;
  const IndirectModel* phi = nullptr;
  const FeatureSchema* schema = nullptr;
  Eigen::VectorXd x_u_fixed;
};

Eigen::VectorXd assemble_instance(const ObjectiveContext& ctx,
                                  const Eigen::VectorXd& x_d);
double objective(const ObjectiveContext& ctx, const Eigen::VectorXd& x_d);
Eigen::VectorXd objective_grad(const ObjectiveContext& ctx,
                               const Eigen::VectorXd& x_d);

struct RecommendationResult {
  std::string id;
  Eigen::VectorXd original;          // full vector at the visit
  Eigen::VectorXd optimized;         // full vector after optimization
  Eigen::VectorXd x_d_original;
  Eigen::VectorXd x_d_optimized;
  double cost_spent = 0.0;
  double probability_before = 0.0;
  double probability_after = 0.0;
  // same optimized directs with binary direct features rounded to {0,1}
  double probability_after_rounded = 0.0;
  // filled by rescore_with_future_immutables when the id exists at v+1
  std::optional<double> probability_next_immutables;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;  // objective value per accepted iterate
};

// warm_start, when given, replaces the origin as the first iterate (it is
// projected into the region first); used by budget sweeps.
RecommendationResult optimize(
    const ObjectiveContext& ctx, const FeasibleRegion& region,
    const OptimizerConfig& config, unsigned long long seed = 0,
    const std::optional<Eigen::VectorXd>& warm_start = std::nullopt);

}  // namespace longric
