#include "longric/cohort.hpp"

#include <algorithm>
#include <set>

namespace longric {

const Instance* VisitData::find(const std::string& id) const {
  for (const auto& inst : instances) {
    if (inst.id == id) return &inst;
  }
  return nullptr;
}

LongitudinalCohort::LongitudinalCohort(std::vector<VisitData> visits)
    : visits_(std::move(visits)) {
  std::sort(visits_.begin(), visits_.end(),
            [](const VisitData& a, const VisitData& b) { return a.v < b.v; });
  validate();
}

const VisitData& LongitudinalCohort::visit(int v) const {
  for (const auto& vd : visits_) {
    if (vd.v == v) return vd;
  }
  throw CohortError("no such visit: " + std::to_string(v));
}

bool LongitudinalCohort::has_visit(int v) const {
  return std::any_of(visits_.begin(), visits_.end(),
                     [&](const VisitData& vd) { return vd.v == v; });
}

void LongitudinalCohort::validate() const {
  std::set<std::string> positive_so_far;
  const VisitData* prev = nullptr;
  for (const auto& vd : visits_) {
    std::set<std::string> ids;
    for (const auto& inst : vd.instances) {
      if (static_cast<std::size_t>(inst.values.size()) != vd.schema.size())
        throw CohortError("instance " + inst.id + " width mismatch at visit " +
                          std::to_string(vd.v));
      if (!ids.insert(inst.id).second)
        throw CohortError("duplicate id " + inst.id + " at visit " +
                          std::to_string(vd.v));
      if (positive_so_far.count(inst.id))
        throw CohortError("id " + inst.id +
                          " was positive at an earlier visit but reappears at "
                          "visit " + std::to_string(vd.v));
      // binary entries must be exactly 0/1 on ingested data
      for (std::size_t j = 0; j < vd.schema.size(); ++j) {
        if (vd.schema.at(j).kind == FeatureKind::Binary) {
          double x = inst.values(static_cast<Eigen::Index>(j));
          if (x != 0.0 && x != 1.0)
            throw CohortError("binary feature " + vd.schema.at(j).name +
                              " has non-binary value for id " + inst.id);
        }
      }
    }
    for (const auto& [id, y] : vd.labels) {
      if (!ids.count(id))
        throw CohortError("label for unknown id " + id + " at visit " +
                          std::to_string(vd.v));
      if (y != 0 && y != 1) throw CohortError("label must be 0/1 for id " + id);
      if (y == 1) positive_so_far.insert(id);
    }
    if (prev) {
      for (const auto& id : ids) {
        if (!prev->find(id))
          throw CohortError("id " + id + " present at visit " +
                            std::to_string(vd.v) + " but not at visit " +
                            std::to_string(prev->v));
      }
      // schema(v) features must be a subset of schema(1) as named sets
      for (const auto& f : vd.schema.features()) {
        if (!visits_.front().schema.has_feature(f.name))
          throw CohortError("feature " + f.name + " at visit " +
                            std::to_string(vd.v) + " missing from visit 1");
      }
    }
    prev = &vd;
  }
}

std::vector<VisitPair> chain_visits(const LongitudinalCohort& cohort) {
  std::vector<VisitPair> pairs;
  const auto& visits = cohort.visits();
  for (std::size_t k = 0; k + 1 < visits.size(); ++k) {
    const VisitData& a = visits[k];
    const VisitData& b = visits[k + 1];
    for (const auto& inst : a.instances) {
      const Instance* next = b.find(inst.id);
      if (next) pairs.push_back({inst.id, &inst, next, a.v});
    }
  }
  // deterministic order: by (v, id)
  std::sort(pairs.begin(), pairs.end(), [](const VisitPair& x, const VisitPair& y) {
    return std::tie(x.v, x.id) < std::tie(y.v, y.id);
  });
  return pairs;
}

SplitInstance split_features(const Eigen::VectorXd& values,
                             const FeatureSchema& schema) {
  if (static_cast<std::size_t>(values.size()) != schema.size())
    throw CohortError("split_features: length mismatch");
  SplitInstance out;
  auto gather = [&](const std::vector<std::size_t>& idx) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k)
      v(static_cast<Eigen::Index>(k)) = values(static_cast<Eigen::Index>(idx[k]));
    return v;
  };
  out.x_u = gather(schema.immutable_indices());
  out.x_d = gather(schema.direct_indices());
  out.x_i = gather(schema.indirect_indices());
  return out;
}

Eigen::VectorXd merge_features(const SplitInstance& parts,
                               const FeatureSchema& schema) {
  if (parts.x_u.size() + parts.x_d.size() + parts.x_i.size() !=
      static_cast<Eigen::Index>(schema.size()))
    throw CohortError("merge_features: length mismatch");
  Eigen::VectorXd out(static_cast<Eigen::Index>(schema.size()));
  auto scatter = [&](const std::vector<std::size_t>& idx,
                     const Eigen::VectorXd& v) {
    for (std::size_t k = 0; k < idx.size(); ++k)
      out(static_cast<Eigen::Index>(idx[k])) = v(static_cast<Eigen::Index>(k));
  };
  scatter(schema.immutable_indices(), parts.x_u);
  scatter(schema.direct_indices(), parts.x_d);
  scatter(schema.indirect_indices(), parts.x_i);
  return out;
}

FeatureSchema fit_scaling(const FeatureSchema& schema,
                          const std::vector<Instance>& instances) {
  std::vector<FeatureSpec> fs = schema.features();
  for (std::size_t j = 0; j < fs.size(); ++j) {
    if (fs[j].kind != FeatureKind::Continuous) continue;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& inst : instances) {
      double x = inst.values(static_cast<Eigen::Index>(j));
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    if (instances.empty()) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi <= lo) hi = lo + 1.0;  // constant column: avoid division by zero
    fs[j].scaling = ScalingStats{lo, hi};
  }
  return FeatureSchema(std::move(fs));
}

Eigen::VectorXd apply_scaling(const Eigen::VectorXd& values,
                              const FeatureSchema& schema) {
  if (static_cast<std::size_t>(values.size()) != schema.size())
    throw CohortError("apply_scaling: length mismatch");
  Eigen::VectorXd out = values;
  for (std::size_t j = 0; j < schema.size(); ++j) {
    const FeatureSpec& f = schema.at(j);
    if (f.scaling) {
      out(static_cast<Eigen::Index>(j)) =
          (values(static_cast<Eigen::Index>(j)) - f.scaling->min) /
          (f.scaling->max - f.scaling->min);
    }
  }
  return out;
}

}  // namespace longric
