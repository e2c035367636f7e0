#pragma once

#include <filesystem>
#include <string>

#include "longric/cohort.hpp"
#include "longric/inverse_opt.hpp"
#include "longric/longitudinal.hpp"

namespace longric {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Schema document: per-feature role/kind/cost/direction/bounds plus any
// fitted scaling statistics.
FeatureSchema load_schema(const std::filesystem::path& path);
void save_schema(const FeatureSchema& schema,
                 const std::filesystem::path& path);
std::string schema_to_json(const FeatureSchema& schema);
FeatureSchema schema_from_json(const std::string& text);

// Cohort directory: one visit{v}.csv per visit, header = id, feature
// names (a subset of the schema, in declaration order), label.
LongitudinalCohort load_cohort(const std::filesystem::path& dir,
                               const std::filesystem::path& schema_path);
void save_cohort(const LongitudinalCohort& cohort,
                 const std::filesystem::path& dir,
                 const std::filesystem::path& schema_path);

// Visit bundle artifact: classifier, phi, imputers, schemas, schema hash.
void save_bundle(const VisitModelBundle& bundle,
                 const std::filesystem::path& path);
VisitModelBundle load_bundle(const std::filesystem::path& path);
std::string bundle_to_json(const VisitModelBundle& bundle);
VisitModelBundle bundle_from_json(const std::string& text);

std::string recommendation_to_json(const RecommendationResult& result);
RecommendationResult recommendation_from_json(const std::string& text);

// Stable content hash used in pipeline manifests.
std::uint64_t file_hash(const std::filesystem::path& path);

}  // namespace longric
