#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "epilogue/core/tensor.hpp"
#include "epilogue/core/tree.hpp"

namespace epilogue {

inline constexpr std::int64_t kVariableExtent = -1;
inline constexpr std::size_t kMaxRank = 8;
inline constexpr std::size_t kMaxDepth = 8;

/// dtype plus shape of one schema leaf. Only the first extent may be
/// kVariableExtent.
struct LeafSpec {
  DType dtype = DType::f64;
  Shape shape;

  bool variable_first() const { return !shape.empty() && shape[0] == kVariableExtent; }
  bool operator==(const LeafSpec&) const = default;
};

using FeatureSpec = Tree<LeafSpec>;
using Nested = Tree<Tensor>;

inline FeatureSpec scalar_spec(DType dtype) { return FeatureSpec(LeafSpec{dtype, {}}); }

struct DatasetSchema {
  FeatureSpec observation;
  FeatureSpec action;
  FeatureSpec reward = scalar_spec(DType::f64);
  FeatureSpec discount = scalar_spec(DType::f64);
  FeatureSpec step_metadata;
  FeatureSpec episode_metadata;
  // String keys to scalar values; stored beside the schema, not hashed with it.
  nlohmann::json dataset_metadata = nlohmann::json::object();

  bool operator==(const DatasetSchema& other) const;
};

// Throws INVALID_SCHEMA naming the first rule broken.
void validate_feature_spec(const FeatureSpec& spec, const std::string& where);
void validate_schema(const DatasetSchema& schema);
void validate_dataset_metadata(const nlohmann::json& doc);

nlohmann::json feature_spec_to_json(const FeatureSpec& spec);
FeatureSpec feature_spec_from_json(const nlohmann::json& doc);

// Canonical schema document: compact UTF-8 JSON, keys in byte order, leaves as
// {"dtype":..,"shape":[..]}. Dataset metadata is not part of it.
std::string canonical_schema_document(const DatasetSchema& schema);
DatasetSchema schema_from_document(std::string_view document);

// Key-sorted compact serialization shared by every on-disk document.
std::string canonical_dump(const nlohmann::json& doc);

// nullopt when value conforms to spec, otherwise a description of the first
// mismatch (path, expected, actual).
std::optional<std::string> conformance_error(const Nested& value, const FeatureSpec& spec);
bool conforms(const Tensor& tensor, const LeafSpec& spec);

enum class ExtentResolution { zero, reject };

/// Canonical placeholder for undefined fields: zeros, false, empty strings.
/// Variable first extents resolve to 0 unless `resolution` is reject, in
/// which case they raise UNRESOLVED_VARIABLE_EXTENT.
Nested undefined_fill(const FeatureSpec& spec,
                      ExtentResolution resolution = ExtentResolution::zero);

// Same structure and shapes as value, every element zeroed.
Nested zeros_like(const Nested& value);

}  // namespace epilogue
