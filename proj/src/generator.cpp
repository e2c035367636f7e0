#include "longric/generator.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "longric/rng.hpp"

namespace longric {

namespace {

FeatureSpec cont(const std::string& name, FeatureRole role, double lo,
                 double hi) {
  FeatureSpec f;
  f.name = name;
  f.role = role;
  f.kind = FeatureKind::Continuous;
  f.lower = lo;
  f.upper = hi;
  return f;
}

FeatureSpec bin(const std::string& name, FeatureRole role) {
  FeatureSpec f;
  f.name = name;
  f.role = role;
  f.kind = FeatureKind::Binary;
  f.lower = 0.0;
  f.upper = 1.0;
  return f;
}

FeatureSpec direct(FeatureSpec f, double cost, int direction) {
  f.cost = cost;
  f.direction = direction;
  return f;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// latent per-patient state carried across visits
struct PatientState {
  std::string id;
  double age, sex, genetic;
  double exercise, diet, smoking, alcohol;
  double rw_marker;
  double cumulative = 0.0;
  std::vector<double> extra_u, extra_d;
};

}  // namespace

FeatureSchema generator_schema(const GeneratorSpec& spec) {
  std::vector<FeatureSpec> fs;
  fs.push_back(cont("age", FeatureRole::Immutable, 40.0, 80.0));
  fs.push_back(bin("sex", FeatureRole::Immutable));
  fs.push_back(cont("genetic_risk", FeatureRole::Immutable, 0.0, 1.0));
  fs.push_back(cont("lin_marker", FeatureRole::Immutable, -50.0, 100.0));
  fs.push_back(cont("rw_marker", FeatureRole::Immutable, -100.0, 100.0));
  fs.push_back(bin("statin_use", FeatureRole::Immutable));
  for (int k = 0; k < spec.extra_immutable; ++k)
    fs.push_back(cont("extra_u" + std::to_string(k), FeatureRole::Immutable,
                      -5.0, 5.0));
  fs.push_back(direct(cont("exercise", FeatureRole::Direct, 0.0, 10.0), 1.0, 1));
  fs.push_back(
      direct(cont("diet_quality", FeatureRole::Direct, 0.0, 10.0), 1.0, 1));
  fs.push_back(direct(bin("smoking", FeatureRole::Direct), 1.0, -1));
  fs.push_back(direct(cont("alcohol", FeatureRole::Direct, 0.0, 10.0), 1.0, -1));
  for (int k = 0; k < spec.extra_direct; ++k)
    fs.push_back(direct(
        cont("extra_d" + std::to_string(k), FeatureRole::Direct, 0.0, 1.0),
        1.0, 0));
  fs.push_back(cont("ldl", FeatureRole::Indirect, 40.0, 260.0));
  fs.push_back(cont("bp", FeatureRole::Indirect, 70.0, 220.0));
  for (int k = 0; k < spec.extra_indirect; ++k)
    fs.push_back(cont("extra_i" + std::to_string(k), FeatureRole::Indirect,
                      -8.0, 8.0));
  return FeatureSchema(std::move(fs));
}

LongitudinalCohort generate_cohort(const GeneratorSpec& spec,
                                   unsigned long long seed) {
  if (!(spec.base_rate > 0.0 && spec.base_rate < 0.5))
    throw std::invalid_argument("generate_cohort: base rate must be in (0,0.5)");
  FeatureSchema base = generator_schema(spec);
  for (const auto& [v, names] : spec.missingness)
    for (const auto& n : names)
      if (!base.has_feature(n))
        throw std::invalid_argument(
            "generate_cohort: missingness schedule drops unknown feature " + n);

  auto rng = named_stream(seed, "generator");
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<PatientState> patients;
  patients.reserve(static_cast<std::size_t>(spec.n_patients));
  for (int i = 0; i < spec.n_patients; ++i) {
    PatientState p;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "p%05d", i);
    p.id = buf;
    p.age = 45.0 + 20.0 * unif(rng);
    p.sex = unif(rng) < 0.5 ? 0.0 : 1.0;
    p.genetic = unif(rng);
    p.exercise = std::clamp(5.0 + 2.5 * gauss(rng), 0.0, 10.0);
    p.diet = std::clamp(5.0 + 2.5 * gauss(rng), 0.0, 10.0);
    p.smoking = unif(rng) < 0.25 ? 1.0 : 0.0;
    p.alcohol = std::clamp(3.0 + 2.0 * gauss(rng), 0.0, 10.0);
    p.rw_marker = 2.0 * gauss(rng);
    for (int k = 0; k < spec.extra_immutable; ++k)
      p.extra_u.push_back(gauss(rng));
    for (int k = 0; k < spec.extra_direct; ++k) p.extra_d.push_back(unif(rng));
    patients.push_back(std::move(p));
  }

  std::vector<VisitData> visits;
  std::vector<bool> alive(patients.size(), true);

  for (int v = 1; v <= spec.visits; ++v) {
    auto vrng = named_stream(seed, "visit-" + std::to_string(v));

    // visit schema = base minus the scheduled missing features
    std::vector<std::string> dropped;
    auto it = spec.missingness.find(v);
    if (it != spec.missingness.end()) dropped = it->second;
    VisitData vd;
    vd.v = v;
    vd.schema = dropped.empty() ? base : base.without(dropped);

    // realized full feature rows for this visit (hazard needs all of them)
    std::vector<Eigen::VectorXd> full_rows(patients.size());
    std::vector<double> hazard_z(patients.size(), 0.0);

    for (std::size_t i = 0; i < patients.size(); ++i) {
      PatientState& p = patients[i];
      // per-patient visit draws happen for everyone so that the RNG stream
      // does not depend on who has already left the cohort
      double n_ldl = gauss(vrng), n_bp = gauss(vrng), n_lin = gauss(vrng);
      double n_rw = gauss(vrng);
      double u_statin = unif(vrng);
      double d_ex = gauss(vrng), d_diet = gauss(vrng), d_alc = gauss(vrng);
      double u_smoke = unif(vrng);
      std::vector<double> d_extra(p.extra_d.size());
      for (auto& x : d_extra) x = gauss(vrng);
      std::vector<double> n_extra_i(static_cast<std::size_t>(spec.extra_indirect));
      for (auto& x : n_extra_i) x = gauss(vrng);

      if (v > 1) {
        p.age += 2.0;  // bi-annual visits
        p.exercise = std::clamp(p.exercise + 1.2 * d_ex, 0.0, 10.0);
        p.diet = std::clamp(p.diet + 1.2 * d_diet, 0.0, 10.0);
        p.alcohol = std::clamp(p.alcohol + 1.5 * d_alc, 0.0, 10.0);
        if (p.smoking > 0.5) {
          if (u_smoke < 0.10) p.smoking = 0.0;
        } else if (u_smoke < 0.04) {
          p.smoking = 1.0;
        }
        for (std::size_t k = 0; k < p.extra_d.size(); ++k)
          p.extra_d[k] = std::clamp(p.extra_d[k] + 0.2 * d_extra[k], 0.0, 1.0);
        p.rw_marker += spec.rw_marker_step * n_rw;
      }
      if (!alive[i]) continue;

      double ldl = 130.0 + 0.9 * (p.age - 55.0) + 25.0 * (p.genetic - 0.5) +
                   7.0 * p.smoking - 2.2 * p.exercise - 1.8 * p.diet +
                   3.0 * std::sin(0.6 * p.exercise) + spec.indirect_noise * n_ldl;
      double bp = 120.0 + 0.7 * (p.age - 55.0) + 12.0 * (p.genetic - 0.5) +
                  5.0 * p.smoking - 1.5 * p.exercise + 0.8 * p.alcohol +
                  2.0 * std::cos(0.5 * p.diet) + spec.indirect_noise * n_bp;
      double lin_marker = 2.0 * p.exercise + 1.5 * p.diet +
                          0.3 * (p.age - 55.0) + spec.lin_marker_noise * n_lin;
      double statin =
          u_statin <
                  sigmoid(0.08 * (ldl - 130.0) + 0.10 * (p.age - 55.0) - 1.0)
              ? 1.0
              : 0.0;

      double exposure = p.smoking +
                        spec.exposure_exercise * (10.0 - p.exercise) +
                        spec.exposure_alcohol * p.alcohol;
      p.cumulative += exposure;

      Eigen::VectorXd row(static_cast<Eigen::Index>(base.size()));
      Eigen::Index c = 0;
      row(c++) = p.age;
      row(c++) = p.sex;
      row(c++) = p.genetic;
      row(c++) = lin_marker;
      row(c++) = p.rw_marker;
      row(c++) = statin;
      for (double x : p.extra_u) row(c++) = x;
      row(c++) = p.exercise;
      row(c++) = p.diet;
      row(c++) = p.smoking;
      row(c++) = p.alcohol;
      for (double x : p.extra_d) row(c++) = x;
      row(c++) = ldl;
      row(c++) = bp;
      for (double x : n_extra_i) row(c++) = x;
      full_rows[i] = std::move(row);

      hazard_z[i] = spec.w_age * (p.age - 55.0) + spec.w_genetic * p.genetic +
                    spec.w_smoking * p.smoking + spec.w_exercise * p.exercise +
                    spec.w_diet * p.diet + spec.w_alcohol * p.alcohol +
                    spec.w_ldl * (ldl - 130.0) + spec.w_bp * (bp - 120.0) +
                    spec.w_cumulative * p.cumulative;
    }

    // calibrate the hazard intercept to the target base rate by bisection
    std::vector<std::size_t> alive_idx;
    for (std::size_t i = 0; i < patients.size(); ++i)
      if (alive[i]) alive_idx.push_back(i);
    double b_lo = -40.0, b_hi = 40.0;
    for (int it2 = 0; it2 < 100; ++it2) {
      double b0 = 0.5 * (b_lo + b_hi);
      double m = 0.0;
      for (std::size_t i : alive_idx) m += sigmoid(hazard_z[i] + b0);
      m = alive_idx.empty() ? 0.0 : m / alive_idx.size();
      (m < spec.base_rate ? b_lo : b_hi) = b0;
    }
    double b0 = 0.5 * (b_lo + b_hi);

    auto lrng = named_stream(seed, "labels-" + std::to_string(v));
    auto drng = named_stream(seed, "dropout-" + std::to_string(v));
    std::vector<std::size_t> visit_cols;
    for (const auto& f : vd.schema.features())
      visit_cols.push_back(base.index_of(f.name));

    for (std::size_t i = 0; i < patients.size(); ++i) {
      double u_label = unif(lrng);
      double u_drop = unif(drng);
      if (!alive[i]) continue;
      Instance inst;
      inst.id = patients[i].id;
      inst.visit = v;
      inst.values.resize(static_cast<Eigen::Index>(visit_cols.size()));
      for (std::size_t k = 0; k < visit_cols.size(); ++k)
        inst.values(static_cast<Eigen::Index>(k)) =
            full_rows[i](static_cast<Eigen::Index>(visit_cols[k]));
      int y = u_label < sigmoid(hazard_z[i] + b0) ? 1 : 0;
      vd.labels[inst.id] = y;
      vd.instances.push_back(std::move(inst));
      if (y == 1 || u_drop < spec.dropout_rate) alive[i] = false;
    }
    visits.push_back(std::move(vd));
  }
  return LongitudinalCohort(std::move(visits));
}

}  // namespace longric
