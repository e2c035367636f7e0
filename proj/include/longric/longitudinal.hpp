#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "longric/cohort.hpp"
#include "longric/imputers.hpp"
#include "longric/inverse_opt.hpp"
#include "longric/nadaraya.hpp"
#include "longric/platt.hpp"

namespace longric {

struct PipelineConfig {
  double svm_C = 1.0;
  double svm_sigma = 0.5;
  double svm_tol = 1e-3;
  int platt_cv_folds = 3;
  bool grid_search = false;  // tune (C, sigma) on a held-out split
  std::vector<double> grid_C = {0.1, 1.0, 10.0};
  std::vector<double> grid_sigma = {0.1, 0.5, 1.0, 2.0};
  double phi_sigma = 0.0;  // <= 0 means cross-validated selection
  ImputerParams imputer_params;
  OptimizerConfig optimizer;
  unsigned long long seed = 0;
};

// Everything needed to score and optimize instances at one visit.
struct VisitModelBundle {
  int v = 1;
  FeatureSchema base_schema;       // full visit-1 feature set
  FeatureSchema augmented_schema;  // base + r_1..r_{v-1} immutable features
  CalibratedClassifier classifier;
  bool has_phi = false;
  IndirectModel phi;
  // one imputer per visit-1 feature absent at this visit
  std::map<std::string, ImputerModel> imputers;
  // instrumentation: highest visit index whose data was read during training
  int max_visit_read = 0;
  // range of this model's predicted probability over its training rows;
  // downstream bundles min-max stretch the risk feature r_v with these so it
  // has usable spread next to the unit-scaled base features
  double risk_lo = 0.0;
  double risk_hi = 1.0;
};

std::vector<std::string> risk_feature_names(int v);

// Lifts a visit-v instance to the full visit-1 feature set: present
// features are copied, absent ones imputed from the present ones.
Eigen::VectorXd impute_to_base(const VisitModelBundle& bundle,
                               const FeatureSchema& visit_schema,
                               const Eigen::VectorXd& values);

// Past-risk prefix r_1..r_{v-1} for one id, each r_k scored by bundle k
// on the id's (imputed, augmented) visit-k vector.
std::vector<double> past_risk(const LongitudinalCohort& cohort,
                              const std::vector<VisitModelBundle>& bundles,
                              const std::string& id, int v);

// Full augmented vector for an id at visit v (impute, then append risk).
Eigen::VectorXd augmented_vector(const LongitudinalCohort& cohort,
                                 const std::vector<VisitModelBundle>& bundles,
                                 const VisitModelBundle& bundle,
                                 const std::string& id,
                                 const Eigen::VectorXd& visit_values);

// Fits imputers, phi and the calibrated classifier for visit v using only
// the given training ids (and their history at visits < v). fixed_imputers,
// when given, are used as-is instead of being refit (keeps the feature map
// of validation models identical to the recommendation model's). Validation
// models that only score assembled vectors can skip the phi fit.
VisitModelBundle train_visit_bundle(
    const LongitudinalCohort& cohort, int v,
    const std::vector<VisitModelBundle>& prior,
    const std::set<std::string>& train_ids, const PipelineConfig& config,
    const std::map<std::string, ImputerModel>* fixed_imputers = nullptr,
    bool fit_phi = true);

ObjectiveContext make_objective_context(const VisitModelBundle& bundle,
                                        const Eigen::VectorXd& augmented_values);

// Swaps in the next visit's immutables (risk features kept as computed at
// v), re-estimates the indirect block from them and the optimized directs,
// and re-scores with the visit-v classifier. x_u_next_base covers the base
// immutable features in augmented-schema order.
double rescore_with_future_immutables(const VisitModelBundle& bundle,
                                      const RecommendationResult& result,
                                      const Eigen::VectorXd& x_u_next_base);

// The reassembled vector behind rescore_with_future_immutables, for scoring
// with other (validation) classifiers.
Eigen::VectorXd reassemble_with_future_immutables(
    const VisitModelBundle& bundle, const RecommendationResult& result,
    const Eigen::VectorXd& x_u_next_base);

}  // namespace longric
