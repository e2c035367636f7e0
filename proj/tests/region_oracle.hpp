#pragma once

#include <random>

#include "longric/inverse_opt.hpp"

namespace testutil {

// Generic random region (arbitrary positive costs); used for contract tests.
inline longric::FeasibleRegion random_region(std::mt19937_64& rng, int d) {
  std::uniform_real_distribution<double> unif;
  longric::FeasibleRegion r;
  r.origin.resize(d);
  r.costs.resize(d);
  r.signs.resize(d);
  r.lower.resize(d);
  r.upper.resize(d);
  for (int j = 0; j < d; ++j) {
    r.origin(j) = unif(rng);
    r.costs(j) = 0.5 + unif(rng);
    int s = int(rng() % 3);
    r.signs(j) = s == 0 ? 1 : (s == 1 ? -1 : 0);
    if (r.signs(j) == 1) {
      r.lower(j) = r.origin(j);
      r.upper(j) = std::max(1.0, r.origin(j));
    } else if (r.signs(j) == -1) {
      r.lower(j) = std::min(0.0, r.origin(j));
      r.upper(j) = r.origin(j);
    } else {
      r.lower(j) = std::min(0.0, r.origin(j));
      r.upper(j) = std::max(1.0, r.origin(j));
    }
  }
  r.budget = 0.2 + 1.5 * unif(rng);
  return r;
}

// Region whose lattice brute-force argmin is well defined: unit costs,
// origin on the coarse grid, budget a grid multiple. With generic costs the
// argmin drifts tangentially along the flat budget facet (distance changes
// only quadratically there while grid feasibility slack is quasi-random),
// so per-coordinate agreement with the exact projection is only meaningful
// when the cost lattice aligns with the search grid.
inline longric::FeasibleRegion lattice_region(std::mt19937_64& rng, int d) {
  std::uniform_real_distribution<double> unif;
  longric::FeasibleRegion r;
  r.origin.resize(d);
  r.costs.resize(d);
  r.signs.resize(d);
  r.lower.resize(d);
  r.upper.resize(d);
  for (int j = 0; j < d; ++j) {
    r.origin(j) = 0.025 * double(int(unif(rng) * 40.0 + 0.5));
    r.costs(j) = 1.0;
    int s = int(rng() % 3);
    r.signs(j) = s == 0 ? 1 : (s == 1 ? -1 : 0);
    if (r.signs(j) == 1) {
      r.lower(j) = r.origin(j);
      r.upper(j) = 1.0;
    } else if (r.signs(j) == -1) {
      r.lower(j) = 0.0;
      r.upper(j) = r.origin(j);
    } else {
      r.lower(j) = 0.0;
      r.upper(j) = 1.0;
    }
  }
  double budgets[] = {0.25, 0.5, 0.75, 1.0};
  r.budget = budgets[rng() % 4];
  return r;
}

// Brute force over nested grids 0.025 -> 0.005 -> 0.001, each stage a
// sub-grid of the next refinement and aligned with the region's origin so
// that costs land exactly on grid multiples.
inline Eigen::VectorXd lattice_project(const longric::FeasibleRegion& r,
                                       const Eigen::VectorXd& z) {
  int d = int(r.origin.size());
  Eigen::VectorXd best = r.origin;
  double best_dist = (best - z).squaredNorm();

  const double steps[] = {0.025, 0.005, 0.001};
  const double windows[] = {10.0, 0.08, 0.016};  // full box first, then local
  for (int stage = 0; stage < 3; ++stage) {
    double step = steps[stage];
    Eigen::VectorXd center = best;
    std::vector<double> start(d), stop(d);
    std::vector<int> counts(d);
    for (int j = 0; j < d; ++j) {
      double lo = std::max(r.lower(j), center(j) - windows[stage]);
      double hi = std::min(r.upper(j), center(j) + windows[stage]);
      // align to the grid anchored at the lower box bound (itself aligned)
      double base = r.lower(j) +
                    std::ceil((lo - r.lower(j)) / step - 1e-9) * step;
      start[j] = base;
      stop[j] = hi + 1e-9;
      counts[j] = std::max(0, int((stop[j] - start[j]) / step) + 1);
    }
    std::vector<int> idx(d, 0);
    bool done = false;
    for (int j = 0; j < d; ++j)
      if (counts[j] == 0) done = true;
    while (!done) {
      Eigen::VectorXd x(d);
      for (int j = 0; j < d; ++j) x(j) = start[j] + idx[j] * step;
      if (longric::region_cost(r, x) <= r.budget + 1e-9) {
        double dist = (x - z).squaredNorm();
        if (dist < best_dist) {
          best_dist = dist;
          best = x;
        }
      }
      int j = 0;
      while (j < d && ++idx[j] >= counts[j]) idx[j++] = 0;
      done = j == d;
    }
  }
  return best;
}

}  // namespace testutil
