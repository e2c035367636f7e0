#include "longric/experiments.hpp"

#include <algorithm>
#include <cmath>

#include "longric/metrics.hpp"
#include "longric/rng.hpp"

namespace longric {

bool ProtocolRecord::firewall_ok() const {
  for (const auto& fr : folds) {
    for (const auto& id : fr.scored_ids) {
      if (fr.validation_train_ids.count(id)) return false;
    }
  }
  return true;
}

namespace {

bool in_recommendation_half(const std::string& id, const EvaluationPlan& plan) {
  std::uint64_t h = fnv1a(id, fnv1a("partition", plan.seed));
  double u = static_cast<double>(h) / 18446744073709551616.0;  // 2^64
  return u < plan.recommendation_fraction;
}

std::set<std::string> ids_at(const VisitData& vd, bool rec_half,
                             const EvaluationPlan& plan) {
  std::set<std::string> out;
  for (const auto& inst : vd.instances)
    if (in_recommendation_half(inst.id, plan) == rec_half) out.insert(inst.id);
  return out;
}

// Recommendation-half bundle chain for visits 1..v (risk-augmented when
// use_risk; the last bundle is the one recommendations optimize against).
std::vector<VisitModelBundle> build_rec_chain(const LongitudinalCohort& cohort,
                                              int v,
                                              const EvaluationPlan& plan,
                                              const PipelineConfig& config,
                                              bool use_risk) {
  std::vector<VisitModelBundle> chain;
  int first = use_risk ? 1 : v;
  for (int k = first; k <= v; ++k) {
    std::set<std::string> train = ids_at(cohort.visit(k), true, plan);
    chain.push_back(
        train_visit_bundle(cohort, k, use_risk ? chain : std::vector<VisitModelBundle>{},
                           train, config));
  }
  return chain;
}

// Immutable block (base-schema order) for the id at the next visit; base
// features absent there fall back to their visit-v (imputed) values.
Eigen::VectorXd next_visit_immutables(const LongitudinalCohort& cohort,
                                      const VisitModelBundle& bundle,
                                      const Eigen::VectorXd& base_v,
                                      const Instance& inst_next) {
  const FeatureSchema& base = bundle.base_schema;
  const FeatureSchema& next_schema = cohort.visit(inst_next.visit).schema;
  Eigen::VectorXd full = base_v;
  for (std::size_t j = 0; j < base.size(); ++j) {
    const std::string& name = base.at(j).name;
    if (next_schema.has_feature(name))
      full(static_cast<Eigen::Index>(j)) = inst_next.values(
          static_cast<Eigen::Index>(next_schema.index_of(name)));
  }
  const auto& u_idx = base.immutable_indices();
  Eigen::VectorXd x_u(static_cast<Eigen::Index>(u_idx.size()));
  for (std::size_t k = 0; k < u_idx.size(); ++k)
    x_u(static_cast<Eigen::Index>(k)) =
        full(static_cast<Eigen::Index>(u_idx[k]));
  return x_u;
}

SeriesPoint summarize(const std::string& name, int v,
                      const std::vector<double>& values) {
  SeriesPoint p;
  p.series = name;
  p.v = v;
  p.n = static_cast<long>(values.size());
  if (!values.empty()) {
    p.mean = mean(values);
    p.quarter_std = stddev(values) / 4.0;
  }
  return p;
}

}  // namespace

LongitudinalCohort scale_cohort(const LongitudinalCohort& cohort,
                                const EvaluationPlan& plan) {
  const VisitData& v1 = cohort.visit(1);
  std::vector<Instance> fit_rows;
  for (const auto& inst : v1.instances)
    if (in_recommendation_half(inst.id, plan)) fit_rows.push_back(inst);
  if (fit_rows.empty()) fit_rows = v1.instances;
  FeatureSchema fitted = fit_scaling(v1.schema, fit_rows);

  std::vector<VisitData> out;
  for (const auto& vd : cohort.visits()) {
    // visit schema restricted from the fitted visit-1 schema
    std::vector<FeatureSpec> specs;
    for (const auto& f : fitted.features())
      if (vd.schema.has_feature(f.name)) specs.push_back(f);
    FeatureSchema with_stats(std::move(specs));

    VisitData nv;
    nv.v = vd.v;
    nv.labels = vd.labels;
    // scaled values, schema published without stats (values are final)
    std::vector<FeatureSpec> clean = with_stats.features();
    for (auto& f : clean) {
      f.scaling.reset();
      if (f.kind == FeatureKind::Continuous) {
        f.lower = 0.0;
        f.upper = 1.0;
      }
    }
    nv.schema = FeatureSchema(std::move(clean));
    for (const auto& inst : vd.instances) {
      Instance si = inst;
      si.values = apply_scaling(inst.values, with_stats);
      nv.instances.push_back(std::move(si));
    }
    out.push_back(std::move(nv));
  }
  return LongitudinalCohort(std::move(out));
}

ProtocolResult run_partition_protocol(const LongitudinalCohort& cohort, int v,
                                      const EvaluationPlan& plan,
                                      const PipelineConfig& config,
                                      double budget, bool use_risk,
                                      bool optimize_instances) {
  if (!cohort.has_visit(v))
    throw std::invalid_argument("run_partition_protocol: no such visit");
  const VisitData& vd = cohort.visit(v);

  std::vector<VisitModelBundle> chain =
      build_rec_chain(cohort, v, plan, config, use_risk);
  const VisitModelBundle& rec_bundle = chain.back();
  std::vector<VisitModelBundle> priors(chain.begin(), chain.end() - 1);

  ProtocolResult result;
  result.v = v;
  result.record.recommendation_train_ids = ids_at(vd, true, plan);

  // evaluation-half instances, sorted by id for determinism
  std::vector<const Instance*> eval_rows;
  for (const auto& inst : vd.instances)
    if (!in_recommendation_half(inst.id, plan)) eval_rows.push_back(&inst);
  std::sort(eval_rows.begin(), eval_rows.end(),
            [](const Instance* a, const Instance* b) { return a->id < b->id; });

  for (int f = 0; f < plan.validation_folds; ++f) {
    std::set<std::string> val_train;
    std::vector<const Instance*> fold_rows;
    for (const Instance* inst : eval_rows) {
      if (fold_of(inst->id, plan.validation_folds, plan.seed, "validation") == f)
        fold_rows.push_back(inst);
      else
        val_train.insert(inst->id);
    }
    if (fold_rows.empty()) continue;

    VisitModelBundle val_bundle =
        train_visit_bundle(cohort, v, priors, val_train, config,
                           &rec_bundle.imputers, /*fit_phi=*/false);

    FoldRecord fr;
    fr.fold = f;
    fr.validation_train_ids = val_train;

    for (const Instance* inst : fold_rows) {
      Eigen::VectorXd aug =
          augmented_vector(cohort, priors, rec_bundle, inst->id, inst->values);
      ObjectiveContext ctx = make_objective_context(rec_bundle, aug);
      SplitInstance parts = split_features(aug, rec_bundle.augmented_schema);

      InstanceOutcome oc;
      oc.id = inst->id;
      oc.v = v;
      oc.fold = f;
      oc.validated_before = predict_proba(val_bundle.classifier, aug);

      if (optimize_instances) {
        FeasibleRegion region = make_feasible_region(
            rec_bundle.augmented_schema, parts.x_d, budget);
        oc.rec = optimize(ctx, region, config.optimizer, plan.seed);
      } else {
        FeasibleRegion region = make_feasible_region(
            rec_bundle.augmented_schema, parts.x_d, 0.0);
        oc.rec = optimize(ctx, region, config.optimizer, plan.seed);
      }
      oc.rec.id = inst->id;
      oc.validated_after = predict_proba(val_bundle.classifier, oc.rec.optimized);

      if (cohort.has_visit(v + 1)) {
        const Instance* next = cohort.visit(v + 1).find(inst->id);
        if (next) {
          Eigen::VectorXd base_v = aug.head(
              static_cast<Eigen::Index>(rec_bundle.base_schema.size()));
          Eigen::VectorXd x_u_next =
              next_visit_immutables(cohort, rec_bundle, base_v, *next);
          Eigen::VectorXd reassembled = reassemble_with_future_immutables(
              rec_bundle, oc.rec, x_u_next);
          oc.rec.probability_next_immutables =
              predict_proba(rec_bundle.classifier, reassembled);
          oc.validated_after_next_u =
              predict_proba(val_bundle.classifier, reassembled);
          oc.rescorable = true;
        }
      }

      fr.scored_ids.insert(inst->id);
      result.outcomes.push_back(std::move(oc));
    }
    result.record.folds.push_back(std::move(fr));
  }

  std::sort(result.outcomes.begin(), result.outcomes.end(),
            [](const InstanceOutcome& a, const InstanceOutcome& b) {
              return a.id < b.id;
            });
  return result;
}

std::vector<SeriesPoint> experiment_1(const LongitudinalCohort& cohort,
                                      const EvaluationPlan& plan,
                                      const PipelineConfig& config) {
  LongitudinalCohort scaled = scale_cohort(cohort, plan);
  double budget = plan.budgets.empty() ? 1.0 : plan.budgets.front();

  std::vector<SeriesPoint> series;
  for (int v : plan.visits) {
    ProtocolResult res = run_partition_protocol(scaled, v, plan, config,
                                                budget, /*use_risk=*/false);
    if (!res.record.firewall_ok())
      throw std::logic_error("experiment_1: leakage firewall violated");
    std::vector<double> before, after, after_next;
    for (const auto& oc : res.outcomes) {
      before.push_back(oc.validated_before);
      after.push_back(oc.validated_after);
      if (oc.rescorable) after_next.push_back(oc.validated_after_next_u);
    }
    series.push_back(summarize("original", v, before));
    series.push_back(summarize("optimized_sameU", v, after));
    series.push_back(summarize("optimized_nextU", v, after_next));
  }
  // original probability at the last visit, scored only
  int last = cohort.num_visits();
  if (std::find(plan.visits.begin(), plan.visits.end(), last) ==
      plan.visits.end()) {
    ProtocolResult res =
        run_partition_protocol(scaled, last, plan, config, budget,
                               /*use_risk=*/false, /*optimize_instances=*/false);
    std::vector<double> before;
    for (const auto& oc : res.outcomes) before.push_back(oc.validated_before);
    series.push_back(summarize("original", last, before));
  }
  return series;
}

std::vector<SeriesPoint> experiment_2(const LongitudinalCohort& cohort,
                                      const EvaluationPlan& plan,
                                      const PipelineConfig& config) {
  LongitudinalCohort scaled = scale_cohort(cohort, plan);
  double budget = plan.budgets.empty() ? 1.0 : plan.budgets.front();
  std::vector<SeriesPoint> series;

  // (i) original probabilities with and without past-risk augmentation
  for (int v : {2, 3}) {
    if (!scaled.has_visit(v)) continue;
    for (bool use_risk : {false, true}) {
      ProtocolResult res =
          run_partition_protocol(scaled, v, plan, config, budget, use_risk,
                                 /*optimize_instances=*/false);
      if (!res.record.firewall_ok())
        throw std::logic_error("experiment_2: leakage firewall violated");
      std::vector<double> before;
      for (const auto& oc : res.outcomes) before.push_back(oc.validated_before);
      series.push_back(summarize(
          use_risk ? "original_risk" : "original_norisk", v, before));
    }
  }

  // (ii) chain A: optimize at v=2 with r_1, rescore against v=3 immutables
  {
    ProtocolResult res = run_partition_protocol(scaled, 2, plan, config,
                                                budget, /*use_risk=*/true);
    std::vector<double> before, after, rescored;
    for (const auto& oc : res.outcomes) {
      before.push_back(oc.validated_before);
      after.push_back(oc.validated_after);
      if (oc.rescorable) rescored.push_back(oc.validated_after_next_u);
    }
    series.push_back(summarize("chainA_v2_before", 2, before));
    series.push_back(summarize("chainA_v2_after", 2, after));
    series.push_back(summarize("chainA_v3_rescored", 3, rescored));
  }

  // (iii) chain B: optimize at v=1, carry the optimized directs forward,
  // re-optimize at v=2 (fresh budget, with r_1), rescore at v=3
  {
    ProtocolResult res1 = run_partition_protocol(scaled, 1, plan, config,
                                                 budget, /*use_risk=*/true);
    std::map<std::string, const InstanceOutcome*> v1_by_id;
    for (const auto& oc : res1.outcomes) v1_by_id[oc.id] = &oc;

    std::vector<double> v1_before, v1_after;
    for (const auto& oc : res1.outcomes) {
      v1_before.push_back(oc.validated_before);
      v1_after.push_back(oc.validated_after);
    }
    series.push_back(summarize("chainB_v1_before", 1, v1_before));
    series.push_back(summarize("chainB_v1_after", 1, v1_after));

    // v=2 machinery with risk augmentation
    std::vector<VisitModelBundle> chain =
        build_rec_chain(scaled, 2, plan, config, true);
    const VisitModelBundle& rec2 = chain.back();
    std::vector<VisitModelBundle> priors(chain.begin(), chain.end() - 1);

    const VisitData& vd2 = scaled.visit(2);
    std::vector<const Instance*> eval_rows;
    for (const auto& inst : vd2.instances)
      if (!in_recommendation_half(inst.id, plan) && v1_by_id.count(inst.id))
        eval_rows.push_back(&inst);
    std::sort(eval_rows.begin(), eval_rows.end(),
              [](const Instance* a, const Instance* b) { return a->id < b->id; });

    std::vector<double> carried, after2, rescored3;
    for (int f = 0; f < plan.validation_folds; ++f) {
      std::set<std::string> val_train;
      std::vector<const Instance*> fold_rows;
      for (const auto& inst : vd2.instances) {
        if (in_recommendation_half(inst.id, plan)) continue;
        if (fold_of(inst.id, plan.validation_folds, plan.seed, "validation") == f) {
          if (v1_by_id.count(inst.id)) {
            auto it = std::find_if(eval_rows.begin(), eval_rows.end(),
                                   [&](const Instance* p) { return p->id == inst.id; });
            if (it != eval_rows.end()) fold_rows.push_back(*it);
          }
        } else {
          val_train.insert(inst.id);
        }
      }
      if (fold_rows.empty()) continue;
      VisitModelBundle val2 = train_visit_bundle(scaled, 2, priors, val_train,
                                                 config, &rec2.imputers, false);

      for (const Instance* inst : fold_rows) {
        Eigen::VectorXd aug =
            augmented_vector(scaled, priors, rec2, inst->id, inst->values);
        SplitInstance parts = split_features(aug, rec2.augmented_schema);
        // carry the optimized v=1 direct block into the v=2 state
        parts.x_d = v1_by_id.at(inst->id)->rec.x_d_optimized;
        ObjectiveContext ctx = make_objective_context(rec2, aug);

        FeasibleRegion region =
            make_feasible_region(rec2.augmented_schema, parts.x_d, budget);
        RecommendationResult rec = optimize(ctx, region, config.optimizer,
                                            plan.seed);
        rec.id = inst->id;

        carried.push_back(predict_proba(val2.classifier,
                                        assemble_instance(ctx, parts.x_d)));
        after2.push_back(predict_proba(val2.classifier, rec.optimized));

        if (scaled.has_visit(3)) {
          const Instance* next = scaled.visit(3).find(inst->id);
          if (next) {
            Eigen::VectorXd base_v =
                aug.head(static_cast<Eigen::Index>(rec2.base_schema.size()));
            Eigen::VectorXd x_u_next =
                next_visit_immutables(scaled, rec2, base_v, *next);
            Eigen::VectorXd reassembled =
                reassemble_with_future_immutables(rec2, rec, x_u_next);
            rescored3.push_back(predict_proba(val2.classifier, reassembled));
          }
        }
      }
    }
    series.push_back(summarize("chainB_v2_carried", 2, carried));
    series.push_back(summarize("chainB_v2_after", 2, after2));
    series.push_back(summarize("chainB_v3_rescored", 3, rescored3));
  }
  return series;
}

std::vector<ImputerComparisonRow> experiment_3(const LongitudinalCohort& cohort,
                                               const EvaluationPlan& plan,
                                               const ImputerParams& params) {
  std::vector<std::string> targets = {"lin_marker", "statin_use", "rw_marker"};
  std::vector<ImputeMethod> methods = {
      ImputeMethod::CarryForward, ImputeMethod::Knn, ImputeMethod::Ridge,
      ImputeMethod::Logistic, ImputeMethod::Cart};
  return compare_imputers(cohort, targets, methods, plan.validation_folds,
                          plan.seed, params);
}

}  // namespace longric
