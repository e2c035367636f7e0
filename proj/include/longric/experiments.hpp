#pragma once

#include <set>
#include <string>
#include <vector>

#include "longric/generator.hpp"
#include "longric/imputers.hpp"
#include "longric/longitudinal.hpp"

namespace longric {

struct EvaluationPlan {
  unsigned long long seed = 1;
  double recommendation_fraction = 0.5;
  int validation_folds = 10;
  std::vector<double> budgets = {1.0};
  std::vector<int> visits = {1, 2};
};

// Firewall bookkeeping: which ids trained each validation model and which
// ids it scored.
struct FoldRecord {
  int fold = 0;
  std::set<std::string> validation_train_ids;
  std::set<std::string> scored_ids;
};

struct ProtocolRecord {
  std::set<std::string> recommendation_train_ids;
  std::vector<FoldRecord> folds;
  bool firewall_ok() const;
};

struct InstanceOutcome {
  std::string id;
  int v = 1;
  int fold = 0;
  double validated_before = 0.0;     // validation model, original instance
  double validated_after = 0.0;      // validation model, optimized, x_{v,U}
  double validated_after_next_u = 0.0;  // optimized, x_{v+1,U}; see rescorable
  bool rescorable = false;
  RecommendationResult rec;
};

struct ProtocolResult {
  int v = 1;
  std::vector<InstanceOutcome> outcomes;  // sorted by id
  ProtocolRecord record;
};

// Two-level evaluative split at visit v: a recommendation half trains the
// model that drives the optimization; the other half cycles through
// validation folds so that every evaluation instance is scored exactly once
// by a model that never saw it. Partition membership and folds are assigned
// by stable id hash. use_risk turns past-risk augmentation on (visits < v
// then contribute recommendation-half bundles). optimize_instances=false
// scores originals only (used where only probabilities are needed).
ProtocolResult run_partition_protocol(const LongitudinalCohort& cohort, int v,
                                      const EvaluationPlan& plan,
                                      const PipelineConfig& config,
                                      double budget, bool use_risk,
                                      bool optimize_instances = true);

// Applies the visit-1 recommendation-half min-max statistics to every visit
// and returns the scaled cohort (binary features pass through).
LongitudinalCohort scale_cohort(const LongitudinalCohort& cohort,
                                const EvaluationPlan& plan);

struct SeriesPoint {
  std::string series;
  int v = 0;
  double mean = 0.0;
  double quarter_std = 0.0;  // dispersion convention: std / 4
  long n = 0;
};

// Experiment 1: optimization without risk augmentation at each visit,
// scored with same-visit and next-visit immutables.
std::vector<SeriesPoint> experiment_1(const LongitudinalCohort& cohort,
                                      const EvaluationPlan& plan,
                                      const PipelineConfig& config);

// Experiment 2: risk-augmented originals at v=2,3 (vs non-augmented), chain
// A (optimize at v=2 with r_1, rescore at v=3's immutables) and chain B
// (optimize at v=1, carry forward, re-optimize at v=2, rescore at v=3).
std::vector<SeriesPoint> experiment_2(const LongitudinalCohort& cohort,
                                      const EvaluationPlan& plan,
                                      const PipelineConfig& config);

// Experiment 3: imputation method comparison on the benchmark features.
std::vector<ImputerComparisonRow> experiment_3(const LongitudinalCohort& cohort,
                                               const EvaluationPlan& plan,
                                               const ImputerParams& params = {});

}  // namespace longric
