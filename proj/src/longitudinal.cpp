#include "longric/longitudinal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "longric/metrics.hpp"
#include "longric/rng.hpp"

namespace longric {

std::vector<std::string> risk_feature_names(int v) {
  std::vector<std::string> names;
  for (int k = 1; k < v; ++k) names.push_back("r_" + std::to_string(k));
  return names;
}

Eigen::VectorXd impute_to_base(const VisitModelBundle& bundle,
                               const FeatureSchema& visit_schema,
                               const Eigen::VectorXd& values) {
  const FeatureSchema& base = bundle.base_schema;
  if (static_cast<std::size_t>(values.size()) != visit_schema.size())
    throw std::invalid_argument("impute_to_base: width mismatch");

  // present features in visit-schema order feed the imputers
  Eigen::VectorXd present = values;
  Eigen::VectorXd out(static_cast<Eigen::Index>(base.size()));
  for (std::size_t j = 0; j < base.size(); ++j) {
    const std::string& name = base.at(j).name;
    if (visit_schema.has_feature(name)) {
      out(static_cast<Eigen::Index>(j)) =
          values(static_cast<Eigen::Index>(visit_schema.index_of(name)));
    } else {
      auto it = bundle.imputers.find(name);
      if (it == bundle.imputers.end())
        throw std::invalid_argument("impute_to_base: no imputer for " + name);
      out(static_cast<Eigen::Index>(j)) = impute(it->second, present);
    }
  }
  return out;
}

namespace {

// Risk features are appended on the calibrated log-odds scale after a
// min-max stretch with the producing bundle's training range; raw
// probabilities cluster near the event rate and would otherwise be
// invisible to the RBF kernel.
double risk_log_odds(double p) {
  double q = std::clamp(p, 1e-12, 1.0 - 1e-12);
  return std::log(q / (1.0 - q));
}

double scale_risk_feature(const VisitModelBundle& producer, double p) {
  double z = risk_log_odds(p);
  if (producer.risk_hi > producer.risk_lo)
    return (z - producer.risk_lo) / (producer.risk_hi - producer.risk_lo);
  return z;
}

Eigen::VectorXd append_risks(const std::vector<VisitModelBundle>& producers,
                             const Eigen::VectorXd& base,
                             const std::vector<double>& risks) {
  Eigen::VectorXd aug(base.size() + static_cast<Eigen::Index>(risks.size()));
  aug.head(base.size()) = base;
  for (std::size_t r = 0; r < risks.size(); ++r)
    aug(base.size() + static_cast<Eigen::Index>(r)) =
        scale_risk_feature(producers[r], risks[r]);
  return aug;
}

}  // namespace

std::vector<double> past_risk(const LongitudinalCohort& cohort,
                              const std::vector<VisitModelBundle>& bundles,
                              const std::string& id, int v) {
  std::vector<double> risks;
  // an empty bundle list disables risk augmentation (standalone visit model)
  int n_risk = std::min<int>(static_cast<int>(bundles.size()), v - 1);
  for (int k = 1; k <= n_risk; ++k) {
    const VisitModelBundle& bk = bundles[static_cast<std::size_t>(k - 1)];
    const VisitData& vk = cohort.visit(k);
    const Instance* inst = vk.find(id);
    if (!inst)
      throw CohortError("past_risk: id " + id + " absent at visit " +
                        std::to_string(k));
    Eigen::VectorXd base = impute_to_base(bk, vk.schema, inst->values);
    Eigen::VectorXd aug = append_risks(bundles, base, risks);
    risks.push_back(predict_proba(bk.classifier, aug));
  }
  return risks;
}

Eigen::VectorXd augmented_vector(const LongitudinalCohort& cohort,
                                 const std::vector<VisitModelBundle>& bundles,
                                 const VisitModelBundle& bundle,
                                 const std::string& id,
                                 const Eigen::VectorXd& visit_values) {
  Eigen::VectorXd base =
      impute_to_base(bundle, cohort.visit(bundle.v).schema, visit_values);
  std::vector<double> risks = past_risk(cohort, bundles, id, bundle.v);
  return append_risks(bundles, base, risks);
}

namespace {

struct TrainMatrices {
  Eigen::MatrixXd X;
  std::vector<int> y;
  std::vector<std::string> ids;
};

TrainMatrices build_training_matrix(const LongitudinalCohort& cohort,
                                    const std::vector<VisitModelBundle>& prior,
                                    const VisitModelBundle& bundle, int v,
                                    const std::set<std::string>& train_ids) {
  const VisitData& vd = cohort.visit(v);
  std::vector<const Instance*> rows;
  for (const auto& inst : vd.instances)
    if (train_ids.count(inst.id)) rows.push_back(&inst);

  TrainMatrices tm;
  tm.X.resize(static_cast<Eigen::Index>(rows.size()),
              static_cast<Eigen::Index>(bundle.augmented_schema.size()));
  tm.y.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    tm.X.row(static_cast<Eigen::Index>(r)) =
        augmented_vector(cohort, prior, bundle, rows[r]->id, rows[r]->values)
            .transpose();
    auto it = vd.labels.find(rows[r]->id);
    if (it == vd.labels.end())
      throw CohortError("missing label for id " + rows[r]->id);
    tm.y.push_back(it->second);
    tm.ids.push_back(rows[r]->id);
  }
  return tm;
}

}  // namespace

VisitModelBundle train_visit_bundle(
    const LongitudinalCohort& cohort, int v,
    const std::vector<VisitModelBundle>& prior,
    const std::set<std::string>& train_ids, const PipelineConfig& config,
    const std::map<std::string, ImputerModel>* fixed_imputers, bool fit_phi) {
  // prior may be empty (risk augmentation off) or cover visits 1..v-1
  if (!prior.empty() && static_cast<int>(prior.size()) != v - 1)
    throw std::invalid_argument(
        "train_visit_bundle: need bundles for all prior visits, or none");

  const VisitData& vd = cohort.visit(v);
  const FeatureSchema& base = cohort.visit(1).schema;

  VisitModelBundle bundle;
  bundle.v = v;
  bundle.base_schema = base;
  bundle.augmented_schema = base.with_appended_immutables(
      risk_feature_names(static_cast<int>(prior.size()) + 1));
  bundle.max_visit_read = v;

  // imputers for visit-1 features absent at v, trained on visit-1 rows of
  // the training ids, predictors = the features present at v
  const VisitData& v1 = cohort.visit(1);
  std::vector<std::string> missing;
  for (const auto& f : base.features())
    if (!vd.schema.has_feature(f.name)) missing.push_back(f.name);
  if (fixed_imputers) {
    for (const auto& name : missing)
      if (!fixed_imputers->count(name))
        throw std::invalid_argument("train_visit_bundle: no fixed imputer for " +
                                    name);
    bundle.imputers = *fixed_imputers;
  } else if (!missing.empty()) {
    std::vector<const Instance*> rows;
    for (const auto& inst : v1.instances)
      if (train_ids.count(inst.id)) rows.push_back(&inst);
    if (rows.empty())
      throw std::invalid_argument("train_visit_bundle: no imputer data");
    std::vector<std::size_t> pred_cols;  // visit-1 indices, visit-v order
    for (const auto& f : vd.schema.features())
      pred_cols.push_back(v1.schema.index_of(f.name));
    Eigen::MatrixXd Xp(static_cast<Eigen::Index>(rows.size()),
                       static_cast<Eigen::Index>(pred_cols.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t c = 0; c < pred_cols.size(); ++c)
        Xp(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            rows[r]->values(static_cast<Eigen::Index>(pred_cols[c]));
    for (const auto& name : missing) {
      std::size_t tcol = v1.schema.index_of(name);
      FeatureKind kind = v1.schema.at(tcol).kind;
      Eigen::VectorXd t(static_cast<Eigen::Index>(rows.size()));
      for (std::size_t r = 0; r < rows.size(); ++r)
        t(static_cast<Eigen::Index>(r)) =
            rows[r]->values(static_cast<Eigen::Index>(tcol));
      ImputeMethod method = kind == FeatureKind::Binary ? ImputeMethod::Logistic
                                                        : ImputeMethod::Ridge;
      bundle.imputers[name] = fit_imputer(method, Xp, t, kind,
                                          config.imputer_params, name);
    }
  }

  TrainMatrices tm = build_training_matrix(cohort, prior, bundle, v, train_ids);
  if (tm.X.rows() < 2)
    throw std::invalid_argument("train_visit_bundle: too few training rows");

  // phi on the imputed + augmented training data
  const auto& d_idx = bundle.augmented_schema.direct_indices();
  const auto& u_idx = bundle.augmented_schema.immutable_indices();
  const auto& i_idx = bundle.augmented_schema.indirect_indices();
  if (fit_phi && !i_idx.empty()) {
    auto gather = [&](const std::vector<std::size_t>& idx) {
      Eigen::MatrixXd M(tm.X.rows(), static_cast<Eigen::Index>(idx.size()));
      for (std::size_t c = 0; c < idx.size(); ++c)
        M.col(static_cast<Eigen::Index>(c)) =
            tm.X.col(static_cast<Eigen::Index>(idx[c]));
      return M;
    };
    Eigen::MatrixXd xd = gather(d_idx), xu = gather(u_idx), xi = gather(i_idx);
    double sigma = config.phi_sigma;
    if (!(sigma > 0.0))
      sigma = select_indirect_bandwidth(xd, xu, xi, 5, config.seed);
    bundle.phi = fit_indirect(xd, xu, xi, sigma);
    bundle.has_phi = true;
  }

  double C = config.svm_C, sigma = config.svm_sigma;
  if (config.grid_search) {
    // 80/20 stratified split by id hash, best validation AUC wins
    std::vector<int> val_mask(tm.ids.size());
    for (std::size_t i = 0; i < tm.ids.size(); ++i)
      val_mask[i] = fold_of(tm.ids[i], 5, config.seed, "gridsearch") == 0;
    std::vector<Eigen::Index> tr, va;
    for (std::size_t i = 0; i < tm.ids.size(); ++i)
      (val_mask[i] ? va : tr).push_back(static_cast<Eigen::Index>(i));
    Eigen::MatrixXd Xtr(tr.size(), tm.X.cols());
    std::vector<int> ytr;
    for (std::size_t k = 0; k < tr.size(); ++k) {
      Xtr.row(static_cast<Eigen::Index>(k)) = tm.X.row(tr[k]);
      ytr.push_back(tm.y[static_cast<std::size_t>(tr[k])]);
    }
    double best_auc = -1.0;
    for (double c_cand : config.grid_C) {
      for (double s_cand : config.grid_sigma) {
        SvmDualModel m;
        try {
          m = train_svm(Xtr, ytr, c_cand, s_cand, config.svm_tol);
        } catch (const std::exception&) {
          continue;
        }
        std::vector<double> scores;
        std::vector<int> yva;
        for (Eigen::Index i : va) {
          scores.push_back(decision_value(m, tm.X.row(i).transpose()));
          yva.push_back(tm.y[static_cast<std::size_t>(i)]);
        }
        bool two = std::count(yva.begin(), yva.end(), 1) > 0 &&
                   std::count(yva.begin(), yva.end(), 0) > 0;
        double a = two ? auc(scores, yva) : 0.5;
        if (a > best_auc) {
          best_auc = a;
          C = c_cand;
          sigma = s_cand;
        }
      }
    }
  }

  bundle.classifier = train_calibrated(tm.X, tm.y, C, sigma, config.svm_tol,
                                       config.platt_cv_folds, config.seed);

  // training-output log-odds range, used to stretch this model's risk score
  // when a later visit consumes it as a feature
  bundle.risk_lo = std::numeric_limits<double>::infinity();
  bundle.risk_hi = -std::numeric_limits<double>::infinity();
  for (Eigen::Index r = 0; r < tm.X.rows(); ++r) {
    double z = risk_log_odds(
        predict_proba(bundle.classifier, tm.X.row(r).transpose()));
    bundle.risk_lo = std::min(bundle.risk_lo, z);
    bundle.risk_hi = std::max(bundle.risk_hi, z);
  }
  return bundle;
}

ObjectiveContext make_objective_context(
    const VisitModelBundle& bundle, const Eigen::VectorXd& augmented_values) {
  ObjectiveContext ctx;
  ctx.clf = &bundle.classifier;
  ctx.phi = bundle.has_phi ? &bundle.phi : nullptr;
  ctx.schema = &bundle.augmented_schema;
  ctx.x_u_fixed = split_features(augmented_values, bundle.augmented_schema).x_u;
  return ctx;
}

Eigen::VectorXd reassemble_with_future_immutables(
    const VisitModelBundle& bundle, const RecommendationResult& result,
    const Eigen::VectorXd& x_u_next_base) {
  SplitInstance parts = split_features(result.optimized, bundle.augmented_schema);
  Eigen::Index n_risk = static_cast<Eigen::Index>(
      bundle.augmented_schema.size() - bundle.base_schema.size());
  Eigen::Index n_base_u = parts.x_u.size() - n_risk;
  if (x_u_next_base.size() != n_base_u)
    throw std::invalid_argument(
        "rescore_with_future_immutables: immutable block size mismatch");
  parts.x_u.head(n_base_u) = x_u_next_base;  // risk tail retained
  parts.x_d = result.x_d_optimized;
  if (bundle.has_phi)
    parts.x_i = estimate_indirect(bundle.phi, parts.x_u, parts.x_d);
  return merge_features(parts, bundle.augmented_schema);
}

double rescore_with_future_immutables(const VisitModelBundle& bundle,
                                      const RecommendationResult& result,
                                      const Eigen::VectorXd& x_u_next_base) {
  return predict_proba(
      bundle.classifier,
      reassemble_with_future_immutables(bundle, result, x_u_next_base));
}

}  // namespace longric
