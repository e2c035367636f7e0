#pragma once

#include <map>
#include <string>
#include <vector>

#include "longric/cohort.hpp"

namespace longric {

// Synthetic longitudinal cohort with the structure the pipeline expects:
// immutables drift deterministically (age +2 per visit), direct features
// follow an autoregressive walk, indirect features are a fixed noisy
// nonlinear function of the others, and the event hazard includes a
// cumulative-exposure latent term that makes past risk informative.
//
// Three benchmark features exist for the imputation comparison:
//   lin_marker    continuous, linear in concurrent features plus noise
//   rw_marker     continuous, pure random walk across visits
//   statin_use    binary, logistic in concurrent features, redrawn per visit
struct GeneratorSpec {
  int n_patients = 4000;
  int visits = 3;
  double base_rate = 0.02;       // per-visit event rate target, in (0, 0.5)
  double dropout_rate = 0.03;    // non-event attrition per visit

  // extra uninformative features per role, beyond the named core set
  int extra_immutable = 0;
  int extra_direct = 0;
  int extra_indirect = 0;

  // hazard weights on (scaled-ish) feature effects
  double w_age = 0.06;
  double w_genetic = 1.2;
  double w_smoking = 0.9;
  double w_exercise = -0.22;
  double w_diet = -0.18;
  double w_alcohol = 0.10;
  double w_ldl = 0.025;
  double w_bp = 0.020;
  double w_cumulative = 0.8;     // weight on the cumulative-exposure latent
  // per-visit exposure = smoking + exposure_exercise*(10-exercise)
  //                      + exposure_alcohol*alcohol
  double exposure_exercise = 1.0 / 3.0;
  double exposure_alcohol = 0.25;

  double indirect_noise = 4.0;   // noise scale on ldl / bp
  double lin_marker_noise = 0.5;
  double rw_marker_step = 1.0;

  // features absent at each visit (visit index -> dropped names)
  std::map<int, std::vector<std::string>> missingness = {
      {2, {"bp"}},
      {3, {"bp", "alcohol"}},
  };
};

FeatureSchema generator_schema(const GeneratorSpec& spec);

LongitudinalCohort generate_cohort(const GeneratorSpec& spec,
                                   unsigned long long seed);

}  // namespace longric
