#include "longric/schema.hpp"

#include <algorithm>

namespace longric {

FeatureSchema::FeatureSchema(std::vector<FeatureSpec> features)
    : features_(std::move(features)) {
  rebuild_index();
  validate();
}

void FeatureSchema::rebuild_index() {
  idx_u_.clear();
  idx_d_.clear();
  idx_i_.clear();
  for (std::size_t i = 0; i < features_.size(); ++i) {
    switch (features_[i].role) {
      case FeatureRole::Immutable: idx_u_.push_back(i); break;
      case FeatureRole::Direct: idx_d_.push_back(i); break;
      case FeatureRole::Indirect: idx_i_.push_back(i); break;
    }
  }
}

std::size_t FeatureSchema::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (features_[i].name == name) return i;
  }
  throw SchemaError("unknown feature: " + name);
}

bool FeatureSchema::has_feature(const std::string& name) const {
  return std::any_of(features_.begin(), features_.end(),
                     [&](const FeatureSpec& f) { return f.name == name; });
}

FeatureSchema FeatureSchema::without(
    const std::vector<std::string>& names) const {
  for (const auto& n : names) {
    if (!has_feature(n)) throw SchemaError("cannot drop unknown feature: " + n);
  }
  std::vector<FeatureSpec> kept;
  for (const auto& f : features_) {
    if (std::find(names.begin(), names.end(), f.name) == names.end())
      kept.push_back(f);
  }
  return FeatureSchema(std::move(kept));
}

FeatureSchema FeatureSchema::with_appended_immutables(
    const std::vector<std::string>& names) const {
  std::vector<FeatureSpec> fs = features_;
  for (const auto& n : names) {
    if (has_feature(n)) throw SchemaError("duplicate feature name: " + n);
    FeatureSpec spec;
    spec.name = n;
    spec.role = FeatureRole::Immutable;
    spec.kind = FeatureKind::Continuous;
    spec.lower = 0.0;
    spec.upper = 1.0;
    fs.push_back(spec);
  }
  return FeatureSchema(std::move(fs));
}

void FeatureSchema::validate() const {
  for (std::size_t i = 0; i < features_.size(); ++i) {
    const FeatureSpec& f = features_[i];
    if (f.name.empty()) throw SchemaError("feature with empty name");
    for (std::size_t j = i + 1; j < features_.size(); ++j) {
      if (features_[j].name == f.name)
        throw SchemaError("duplicate feature name: " + f.name);
    }
    if (f.kind == FeatureKind::Binary && (f.lower != 0.0 || f.upper != 1.0))
      throw SchemaError("binary feature " + f.name + " must have bounds [0,1]");
    if (f.role == FeatureRole::Direct) {
      if (f.lower > f.upper)
        throw SchemaError("feature " + f.name + " has lower > upper");
      if (f.cost <= 0.0)
        throw SchemaError("feature " + f.name + " needs a positive cost");
      if (f.direction != -1 && f.direction != 0 && f.direction != 1)
        throw SchemaError("feature " + f.name + " has invalid direction");
    }
  }
}

}  // namespace longric
