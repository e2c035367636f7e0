#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace longric {

enum class FeatureRole { Immutable, Direct, Indirect };
enum class FeatureKind { Continuous, Binary };

// +1 = may only increase, -1 = may only decrease, 0 = free (both directions,
// cost charged on absolute change).
using Direction = int;

struct ScalingStats {
  double min = 0.0;
  double max = 1.0;
};

struct FeatureSpec {
  std::string name;
  FeatureRole role = FeatureRole::Immutable;
  FeatureKind kind = FeatureKind::Continuous;
  double cost = 0.0;       // meaningful for role == Direct only
  Direction direction = 0; // meaningful for role == Direct only
  double lower = 0.0;
  double upper = 1.0;
  std::optional<ScalingStats> scaling; // fitted min-max stats, continuous only
};

// Ordered feature declaration; all vectors align to this order.
class FeatureSchema {
 public:
  FeatureSchema() = default;
  explicit FeatureSchema(std::vector<FeatureSpec> features);

  std::size_t size() const { return features_.size(); }
  const FeatureSpec& at(std::size_t i) const { return features_.at(i); }
  const std::vector<FeatureSpec>& features() const { return features_; }

  // Index lookup by name; throws if absent.
  std::size_t index_of(const std::string& name) const;
  bool has_feature(const std::string& name) const;

  // Index sets for the role partition (in declaration order).
  const std::vector<std::size_t>& immutable_indices() const { return idx_u_; }
  const std::vector<std::size_t>& direct_indices() const { return idx_d_; }
  const std::vector<std::size_t>& indirect_indices() const { return idx_i_; }

  // Returns a schema with the named features removed (for visits where they
  // are absent on disk).
  FeatureSchema without(const std::vector<std::string>& names) const;

  // Returns a schema with extra immutable continuous features appended
  // (used for past-risk augmentation).
  FeatureSchema with_appended_immutables(
      const std::vector<std::string>& names) const;

  void validate() const;

 private:
  std::vector<FeatureSpec> features_;
  std::vector<std::size_t> idx_u_, idx_d_, idx_i_;
  void rebuild_index();
};

struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace longric
