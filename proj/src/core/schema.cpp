#include "epilogue/core/schema.hpp"

namespace epilogue {

using nlohmann::json;

bool DatasetSchema::operator==(const DatasetSchema& other) const {
  return observation == other.observation && action == other.action && reward == other.reward &&
         discount == other.discount && step_metadata == other.step_metadata &&
         episode_metadata == other.episode_metadata &&
         dataset_metadata == other.dataset_metadata;
}

void validate_feature_spec(const FeatureSpec& spec, const std::string& where) {
  if (spec.depth() > kMaxDepth) fail(ErrorCode::invalid_schema, where + ": depth exceeds 8");
  auto check_node = [&](const FeatureSpec& node, const std::string& path, auto& self) -> void {
    if (node.is_leaf()) {
      const auto& leaf = node.leaf();
      if (leaf.shape.size() > kMaxRank) {
        fail(ErrorCode::invalid_schema, where + "/" + path + ": rank exceeds 8");
      }
      for (std::size_t i = 0; i < leaf.shape.size(); ++i) {
        auto extent = leaf.shape[i];
        if (extent == kVariableExtent && i == 0) continue;
        if (extent < 0) {
          fail(ErrorCode::invalid_schema,
               where + "/" + path + ": only the first extent may be variable");
        }
      }
      return;
    }
    for (const auto& e : node.children()) {
      if (e.name.empty()) fail(ErrorCode::invalid_schema, where + ": empty feature name");
      if (e.name.find('/') != std::string::npos) {
        fail(ErrorCode::invalid_schema, where + ": feature name '" + e.name + "' contains '/'");
      }
      self(e.value, path.empty() ? e.name : path + "/" + e.name, self);
    }
  };
  check_node(spec, "", check_node);
}

void validate_dataset_metadata(const json& doc) {
  if (!doc.is_object()) fail(ErrorCode::invalid_schema, "dataset metadata must be an object");
  for (const auto& [key, value] : doc.items()) {
    if (value.is_structured()) {
      fail(ErrorCode::invalid_schema, "dataset metadata value '" + key + "' is not a scalar");
    }
  }
}

void validate_schema(const DatasetSchema& schema) {
  validate_feature_spec(schema.observation, "observation");
  validate_feature_spec(schema.action, "action");
  validate_feature_spec(schema.reward, "reward");
  validate_feature_spec(schema.discount, "discount");
  validate_feature_spec(schema.step_metadata, "step_metadata");
  validate_feature_spec(schema.episode_metadata, "episode_metadata");
  validate_dataset_metadata(schema.dataset_metadata);
}

json feature_spec_to_json(const FeatureSpec& spec) {
  if (spec.is_leaf()) {
    return json{{"dtype", std::string(dtype_name(spec.leaf().dtype))},
                {"shape", spec.leaf().shape}};
  }
  json node = json::object();
  for (const auto& e : spec.children()) node[e.name] = feature_spec_to_json(e.value);
  return node;
}

FeatureSpec feature_spec_from_json(const json& doc) {
  if (!doc.is_object()) fail(ErrorCode::invalid_schema, "feature spec node must be an object");
  auto dtype_it = doc.find("dtype");
  if (dtype_it != doc.end() && dtype_it->is_string()) {
    auto dtype = parse_dtype(dtype_it->get<std::string>());
    if (!dtype) fail(ErrorCode::invalid_schema, "unknown dtype " + dtype_it->get<std::string>());
    auto shape_it = doc.find("shape");
    if (shape_it == doc.end() || !shape_it->is_array() || doc.size() != 2) {
      fail(ErrorCode::invalid_schema, "leaf must be {\"dtype\":..,\"shape\":[..]}");
    }
    LeafSpec leaf{*dtype, {}};
    for (const auto& extent : *shape_it) {
      if (!extent.is_number_integer()) fail(ErrorCode::invalid_schema, "extent must be an integer");
      leaf.shape.push_back(extent.get<std::int64_t>());
    }
    return FeatureSpec(std::move(leaf));
  }
  FeatureSpec node;
  for (const auto& [name, child] : doc.items()) node.set(name, feature_spec_from_json(child));
  return node;
}

std::string canonical_dump(const json& doc) {
  // nlohmann::json objects are std::map backed, so keys come out byte-ordered.
  return doc.dump(-1, ' ', false, json::error_handler_t::strict);
}

std::string canonical_schema_document(const DatasetSchema& schema) {
  json doc{{"action", feature_spec_to_json(schema.action)},
           {"discount", feature_spec_to_json(schema.discount)},
           {"episode_metadata", feature_spec_to_json(schema.episode_metadata)},
           {"observation", feature_spec_to_json(schema.observation)},
           {"reward", feature_spec_to_json(schema.reward)},
           {"step_metadata", feature_spec_to_json(schema.step_metadata)}};
  return canonical_dump(doc);
}

DatasetSchema schema_from_document(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::exception& e) {
    fail(ErrorCode::invalid_schema, std::string("schema document is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail(ErrorCode::invalid_schema, "schema document must be an object");
  DatasetSchema schema;
  auto field = [&](const char* name, FeatureSpec& out) {
    auto it = doc.find(name);
    if (it == doc.end()) fail(ErrorCode::invalid_schema, std::string("missing field ") + name);
    out = feature_spec_from_json(*it);
  };
  field("observation", schema.observation);
  field("action", schema.action);
  field("reward", schema.reward);
  field("discount", schema.discount);
  field("step_metadata", schema.step_metadata);
  field("episode_metadata", schema.episode_metadata);
  validate_schema(schema);
  return schema;
}

bool conforms(const Tensor& tensor, const LeafSpec& spec) {
  if (tensor.dtype() != spec.dtype || tensor.rank() != spec.shape.size()) return false;
  for (std::size_t i = 0; i < spec.shape.size(); ++i) {
    if (spec.shape[i] == kVariableExtent) continue;
    if (tensor.shape()[i] != spec.shape[i]) return false;
  }
  return true;
}

namespace {

std::string leaf_text(const LeafSpec& s) {
  return std::string(dtype_name(s.dtype)) + shape_string(s.shape);
}

std::optional<std::string> mismatch(const Nested& value, const FeatureSpec& spec,
                                    const std::string& path) {
  std::string at = path.empty() ? "<root>" : path;
  if (spec.is_leaf()) {
    if (!value.is_leaf()) return at + ": expected tensor " + leaf_text(spec.leaf());
    const Tensor& t = value.leaf();
    if (!conforms(t, spec.leaf())) {
      return at + ": expected " + leaf_text(spec.leaf()) + ", got " +
             std::string(dtype_name(t.dtype())) + shape_string(t.shape());
    }
    return std::nullopt;
  }
  if (value.is_leaf()) return at + ": expected nested fields, got tensor";
  const auto& want = spec.children();
  const auto& have = value.children();
  std::size_t i = 0, j = 0;
  while (i < want.size() || j < have.size()) {
    if (j == have.size() || (i < want.size() && want[i].name < have[j].name)) {
      return at + ": missing field '" + want[i].name + "'";
    }
    if (i == want.size() || have[j].name < want[i].name) {
      return at + ": unexpected field '" + have[j].name + "'";
    }
    auto sub = path.empty() ? want[i].name : path + "/" + want[i].name;
    if (auto err = mismatch(have[j].value, want[i].value, sub)) return err;
    ++i;
    ++j;
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::string> conformance_error(const Nested& value, const FeatureSpec& spec) {
  return mismatch(value, spec, "");
}

Nested undefined_fill(const FeatureSpec& spec, ExtentResolution resolution) {
  return spec.map_leaves([&](const LeafSpec& leaf) {
    Shape shape = leaf.shape;
    if (leaf.variable_first()) {
      if (resolution == ExtentResolution::reject) {
        fail(ErrorCode::unresolved_variable_extent, "leaf has a variable first extent");
      }
      shape[0] = 0;
    }
    return Tensor::zeros(leaf.dtype, std::move(shape));
  });
}

Nested zeros_like(const Nested& value) {
  return value.map_leaves([](const Tensor& t) { return Tensor::zeros(t.dtype(), t.shape()); });
}

}  // namespace epilogue
