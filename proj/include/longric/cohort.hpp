#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "longric/schema.hpp"

namespace longric {

struct Instance {
  std::string id;
  Eigen::VectorXd values;  // aligned to the visit schema order
  int visit = 1;
};

struct VisitData {
  int v = 1;
  FeatureSchema schema;
  std::vector<Instance> instances;
  std::map<std::string, int> labels;  // id -> {0,1}; label observed at v+1

  const Instance* find(const std::string& id) const;
};

struct CohortError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Longitudinal cohort: shrinking id sets across visits, positives excluded
// from all later visits, later schemas are subsets of the visit-1 schema.
class LongitudinalCohort {
 public:
  LongitudinalCohort() = default;
  explicit LongitudinalCohort(std::vector<VisitData> visits);

  const std::vector<VisitData>& visits() const { return visits_; }
  const VisitData& visit(int v) const;
  bool has_visit(int v) const;
  int num_visits() const { return static_cast<int>(visits_.size()); }

  void validate() const;

 private:
  std::vector<VisitData> visits_;
};

struct VisitPair {
  std::string id;
  const Instance* at_v;
  const Instance* at_v_plus_1;
  int v;
};

// Aligned (x_v, x_{v+1}) pairs for every id present at consecutive visits.
std::vector<VisitPair> chain_visits(const LongitudinalCohort& cohort);

struct SplitInstance {
  Eigen::VectorXd x_u, x_d, x_i;
};

SplitInstance split_features(const Eigen::VectorXd& values,
                             const FeatureSchema& schema);

// Inverse of split_features under the same schema.
Eigen::VectorXd merge_features(const SplitInstance& parts,
                               const FeatureSchema& schema);

// Min-max scaling for continuous features, fitted on a subset of visit-1
// instances and written back into the schema's per-feature stats.
FeatureSchema fit_scaling(const FeatureSchema& schema,
                          const std::vector<Instance>& instances);
Eigen::VectorXd apply_scaling(const Eigen::VectorXd& values,
                              const FeatureSchema& schema);

}  // namespace longric
