#include "epilogue/transforms/absorbing.hpp"

#include <algorithm>
#include <cstring>

#include "epilogue/transforms/windows.hpp"

namespace epilogue::transforms {
namespace {

const Tensor& vector_observation(const StepRecord& step) {
  if (!step.observation.is_leaf()) {
    fail(ErrorCode::non_vector_observation, "observation is a nested structure");
  }
  const Tensor& obs = step.observation.leaf();
  if (obs.rank() != 1 || obs.dtype() == DType::bytes) {
    fail(ErrorCode::non_vector_observation,
         "observation must be a numeric vector, got " + std::string(dtype_name(obs.dtype())) +
             shape_string(obs.shape()));
  }
  return obs;
}

std::vector<std::uint8_t> encoded_bit(DType dtype, bool bit) {
  std::vector<std::uint8_t> out(dtype_size(dtype), 0);
  if (!bit) return out;
  switch (dtype) {
    case DType::f32: {
      const float one = 1.0f;
      std::memcpy(out.data(), &one, sizeof one);
      break;
    }
    case DType::f64: {
      const double one = 1.0;
      std::memcpy(out.data(), &one, sizeof one);
      break;
    }
    default:
      out[0] = 1;  // little-endian integer or bool
  }
  return out;
}

StepRecord absorb_step(StepRecord step) {
  const Tensor& obs = vector_observation(step);
  const bool absorbing = step.is_terminal;
  std::vector<std::uint8_t> raw(obs.raw().begin(), obs.raw().end());
  if (absorbing) std::fill(raw.begin(), raw.end(), 0);
  auto bit = encoded_bit(obs.dtype(), absorbing);
  raw.insert(raw.end(), bit.begin(), bit.end());
  step.observation = Nested(Tensor::from_raw(obs.dtype(), {obs.shape()[0] + 1}, std::move(raw)));
  if (absorbing) {
    step.action = zeros_like(step.action);
    step.is_terminal = false;
    step.is_last = false;
  }
  return step;
}

}  // namespace

EpisodeRecord to_absorbing(EpisodeRecord episode) {
  for (const auto& step : episode.steps) vector_observation(step);
  episode = concat_if_terminal(std::move(episode), duplicate_step());
  for (auto& step : episode.steps) step = absorb_step(std::move(step));
  return episode;
}

Stream<EpisodeRecord> to_absorbing(Stream<EpisodeRecord> dataset) {
  return std::move(dataset).map([](EpisodeRecord e) { return to_absorbing(std::move(e)); });
}

DatasetSchema absorbing_schema(DatasetSchema schema) {
  if (!schema.observation.is_leaf() || schema.observation.leaf().shape.size() != 1 ||
      schema.observation.leaf().dtype == DType::bytes) {
    fail(ErrorCode::non_vector_observation, "observation spec must be a numeric vector");
  }
  LeafSpec spec = schema.observation.leaf();
  if (spec.shape[0] != kVariableExtent) spec.shape[0] += 1;
  schema.observation = FeatureSpec(spec);
  return schema;
}

}  // namespace epilogue::transforms
