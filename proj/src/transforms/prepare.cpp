#include "epilogue/transforms/prepare.hpp"

#include <cstring>

namespace epilogue::transforms {
namespace {

template <class Node>
const Node& leaf_at(const Tree<Node>& tree, const std::string& path) {
  const Tree<Node>* found = tree.find_path(path);
  if (found == nullptr || !found->is_leaf()) {
    fail(ErrorCode::unknown_field, "observation has no leaf '" + path + "'");
  }
  return found->leaf();
}

void append_as(DType dtype, const Tensor& t, std::vector<std::uint8_t>& raw) {
  if (t.dtype() == dtype) {
    raw.insert(raw.end(), t.raw().begin(), t.raw().end());
    return;
  }
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double v = t.as_double(i);
    const auto at = raw.size();
    raw.resize(at + sizeof v);
    std::memcpy(raw.data() + at, &v, sizeof v);
  }
}

}  // namespace

Nested flatten_observation(const Nested& observation, const std::vector<std::string>& paths) {
  if (paths.empty()) fail(ErrorCode::invalid_argument, "no observation leaves selected");
  std::vector<const Tensor*> leaves;
  for (const auto& p : paths) {
    const Tensor& t = leaf_at(observation, p);
    if (t.dtype() == DType::bytes) fail(ErrorCode::unsupported_dtype, "leaf '" + p + "' is bytes");
    leaves.push_back(&t);
  }
  DType dtype = leaves.front()->dtype();
  for (const Tensor* t : leaves) {
    if (t->dtype() != dtype) dtype = DType::f64;
  }
  std::vector<std::uint8_t> raw;
  std::int64_t width = 0;
  for (const Tensor* t : leaves) {
    append_as(dtype, *t, raw);
    width += static_cast<std::int64_t>(t->size());
  }
  return Nested(Tensor::from_raw(dtype, {width}, std::move(raw)));
}

StepRecord flatten_observation(StepRecord step, const std::vector<std::string>& paths) {
  step.observation = flatten_observation(step.observation, paths);
  return step;
}

DatasetSchema flattened_schema(DatasetSchema schema, const std::vector<std::string>& paths) {
  if (paths.empty()) fail(ErrorCode::invalid_argument, "no observation leaves selected");
  std::optional<DType> dtype;
  std::int64_t width = 0;
  for (const auto& p : paths) {
    const LeafSpec& spec = leaf_at(schema.observation, p);
    if (spec.dtype == DType::bytes) fail(ErrorCode::unsupported_dtype, "leaf '" + p + "' is bytes");
    for (auto extent : spec.shape) {
      if (extent == kVariableExtent) {
        fail(ErrorCode::unresolved_variable_extent, "leaf '" + p + "' has a variable extent");
      }
    }
    width += static_cast<std::int64_t>(shape_elements(spec.shape));
    dtype = !dtype || *dtype == spec.dtype ? spec.dtype : DType::f64;
  }
  schema.observation = FeatureSpec(LeafSpec{*dtype, {width}});
  return schema;
}

}  // namespace epilogue::transforms
