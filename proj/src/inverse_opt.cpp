#include "longric/inverse_opt.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace longric {

FeasibleRegion make_feasible_region(const FeatureSchema& schema,
                                    const Eigen::VectorXd& x_d_origin,
                                    double budget) {
  const auto& d_idx = schema.direct_indices();
  if (static_cast<std::size_t>(x_d_origin.size()) != d_idx.size())
    throw std::invalid_argument("make_feasible_region: direct block mismatch");
  if (budget < 0.0)
    throw std::invalid_argument("make_feasible_region: negative budget");

  FeasibleRegion r;
  const Eigen::Index nd = x_d_origin.size();
  r.origin = x_d_origin;
  r.costs.resize(nd);
  r.signs.resize(nd);
  r.lower.resize(nd);
  r.upper.resize(nd);
  r.budget = budget;
  for (Eigen::Index k = 0; k < nd; ++k) {
    const FeatureSpec& f = schema.at(d_idx[static_cast<std::size_t>(k)]);
    r.costs(k) = f.cost;
    r.signs(k) = f.direction;
    double x = x_d_origin(k);
    // direction rule: increase-only pins the lower bound at the origin,
    // decrease-only pins the upper bound; the far side reaches the unit
    // interval edge (or the origin itself if it already lies outside)
    if (f.direction == 1) {
      r.lower(k) = x;
      r.upper(k) = std::max(1.0, x);
    } else if (f.direction == -1) {
      r.lower(k) = std::min(0.0, x);
      r.upper(k) = x;
    } else {
      r.lower(k) = std::min(0.0, x);
      r.upper(k) = std::max(1.0, x);
    }
  }
  return r;
}

double region_cost(const FeasibleRegion& region, const Eigen::VectorXd& x) {
  double c = 0.0;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    double d = x(k) - region.origin(k);
    if (region.signs(k) == 0)
      c += region.costs(k) * std::abs(d);
    else
      c += region.costs(k) * region.signs(k) * d;
  }
  return c;
}

namespace {

// x(lambda): box clip of the multiplier-shrunk point; monotone cost in lambda
Eigen::VectorXd shrink(const FeasibleRegion& r, const Eigen::VectorXd& z,
                       double lambda) {
  Eigen::VectorXd x(z.size());
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    double v;
    if (r.signs(k) == 0) {
      // free direction: soft-threshold the displacement from the origin
      double d = z(k) - r.origin(k);
      double a = lambda * r.costs(k);
      double s = std::abs(d) <= a ? 0.0 : (d > 0 ? d - a : d + a);
      v = r.origin(k) + s;
    } else {
      v = z(k) - lambda * r.costs(k) * r.signs(k);
    }
    x(k) = std::clamp(v, r.lower(k), r.upper(k));
  }
  return x;
}

}  // namespace

Eigen::VectorXd project(const FeasibleRegion& region, const Eigen::VectorXd& z,
                        double projection_tol) {
  if (z.size() != region.origin.size())
    throw std::invalid_argument("project: dimension mismatch");
  Eigen::VectorXd x = shrink(region, z, 0.0);
  if (region_cost(region, x) <= region.budget + projection_tol) return x;

  // bracket the multiplier, then bisect on the monotone budget residual
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    if (region_cost(region, shrink(region, z, hi)) <= region.budget) break;
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    double c = region_cost(region, shrink(region, z, mid));
    if (std::abs(c - region.budget) <= projection_tol) return shrink(region, z, mid);
    (c > region.budget ? lo : hi) = mid;
    if (hi - lo < 1e-16 * std::max(1.0, hi)) break;
  }
  Eigen::VectorXd out = shrink(region, z, hi);
  if (region_cost(region, out) > region.budget + projection_tol)
    throw std::runtime_error("project: bisection did not converge");
  return out;
}

Eigen::VectorXd assemble_instance(const ObjectiveContext& ctx,
                                  const Eigen::VectorXd& x_d) {
  const FeatureSchema& schema = *ctx.schema;
  SplitInstance parts;
  parts.x_u = ctx.x_u_fixed;
  parts.x_d = x_d;
  if (!schema.indirect_indices().empty()) {
    if (!ctx.phi)
      throw std::invalid_argument(
          "assemble_instance: schema has indirect features but no phi model");
    parts.x_i = estimate_indirect(*ctx.phi, ctx.x_u_fixed, x_d);
  } else {
    parts.x_i = Eigen::VectorXd(0);
  }
  return merge_features(parts, schema);
}

double objective(const ObjectiveContext& ctx, const Eigen::VectorXd& x_d) {
  return predict_proba(*ctx.clf, assemble_instance(ctx, x_d));
}

Eigen::VectorXd objective_grad(const ObjectiveContext& ctx,
                               const Eigen::VectorXd& x_d) {
  const FeatureSchema& schema = *ctx.schema;
  Eigen::VectorXd x = assemble_instance(ctx, x_d);
  Eigen::VectorXd full = grad_proba(*ctx.clf, x);

  const auto& d_idx = schema.direct_indices();
  const auto& i_idx = schema.indirect_indices();
  Eigen::VectorXd g(static_cast<Eigen::Index>(d_idx.size()));
  for (std::size_t k = 0; k < d_idx.size(); ++k)
    g(static_cast<Eigen::Index>(k)) =
        full(static_cast<Eigen::Index>(d_idx[k]));
  if (!i_idx.empty()) {
    Eigen::VectorXd gi(static_cast<Eigen::Index>(i_idx.size()));
    for (std::size_t k = 0; k < i_idx.size(); ++k)
      gi(static_cast<Eigen::Index>(k)) =
          full(static_cast<Eigen::Index>(i_idx[k]));
    Eigen::MatrixXd jac = grad_indirect_wrt_direct(*ctx.phi, ctx.x_u_fixed, x_d);
    g += jac.transpose() * gi;
  }
  return g;
}

namespace {

struct PgdOutcome {
  Eigen::VectorXd x;
  double f = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;
};

PgdOutcome run_pgd(const ObjectiveContext& ctx, const FeasibleRegion& region,
                   const OptimizerConfig& cfg, const Eigen::VectorXd& start) {
  PgdOutcome out;
  out.x = project(region, start, cfg.projection_tol);
  out.f = objective(ctx, out.x);
  out.trace.push_back(out.f);

  for (int t = 0; t < cfg.max_iters; ++t) {
    Eigen::VectorXd g = objective_grad(ctx, out.x);
    if (g.lpNorm<Eigen::Infinity>() < 1e-14) {
      out.converged = true;
      break;
    }
    double step = cfg.initial_step;
    bool accepted = false;
    while (step > 1e-14) {
      Eigen::VectorXd cand =
          project(region, out.x - step * g, cfg.projection_tol);
      double descent = g.dot(cand - out.x);  // <= 0 by projection geometry
      double fc = objective(ctx, cand);
      if (fc <= out.f + cfg.armijo_c * descent) {
        double rel = std::abs(out.f - fc) / std::max(1.0, std::abs(out.f));
        out.x = cand;
        out.f = fc;
        out.trace.push_back(fc);
        accepted = true;
        ++out.iterations;
        if (rel < cfg.rel_tol) out.converged = true;
        break;
      }
      step *= cfg.backtrack_factor;
    }
    if (!accepted) {
      out.converged = true;  // no descent direction within step resolution
      break;
    }
    if (out.converged) break;
  }
  return out;
}

}  // namespace

RecommendationResult optimize(const ObjectiveContext& ctx,
                              const FeasibleRegion& region,
                              const OptimizerConfig& config,
                              unsigned long long seed,
                              const std::optional<Eigen::VectorXd>& warm_start) {
  PgdOutcome best =
      run_pgd(ctx, region, config, warm_start ? *warm_start : region.origin);
  if (warm_start) {
    // never worse than staying at the origin
    double f0 = objective(ctx, region.origin);
    if (f0 < best.f) {
      PgdOutcome from_origin = run_pgd(ctx, region, config, region.origin);
      if (from_origin.f < best.f) best = std::move(from_origin);
    }
  }

  if (config.restarts > 0) {
    std::mt19937_64 rng(seed ^ 0x7f4a7c159e3779b9ULL);
    for (int r = 0; r < config.restarts; ++r) {
      Eigen::VectorXd z(region.origin.size());
      for (Eigen::Index k = 0; k < z.size(); ++k) {
        std::uniform_real_distribution<double> u(region.lower(k),
                                                 region.upper(k));
        z(k) = u(rng);
      }
      PgdOutcome cand = run_pgd(ctx, region, config, z);
      if (cand.f < best.f) best = std::move(cand);
    }
  }

  RecommendationResult res;
  res.x_d_original = region.origin;
  res.x_d_optimized = best.x;
  res.original = assemble_instance(ctx, region.origin);
  res.optimized = assemble_instance(ctx, best.x);
  res.probability_before = objective(ctx, region.origin);
  res.probability_after = best.f;
  res.cost_spent = region_cost(region, best.x);
  res.iterations = best.iterations;
  res.converged = best.converged;
  res.trace = std::move(best.trace);

  // rounded variant for binary direct features, reported alongside
  Eigen::VectorXd rounded = best.x;
  const auto& d_idx = ctx.schema->direct_indices();
  for (std::size_t k = 0; k < d_idx.size(); ++k) {
    if (ctx.schema->at(d_idx[k]).kind == FeatureKind::Binary) {
      Eigen::Index kk = static_cast<Eigen::Index>(k);
      rounded(kk) = rounded(kk) >= 0.5 ? 1.0 : 0.0;
    }
  }
  res.probability_after_rounded = objective(ctx, rounded);
  return res;
}

}  // namespace longric
