#include "epilogue/env/environment.hpp"

namespace epilogue::env {

std::string_view step_type_name(StepType type) {
  switch (type) {
    case StepType::first: return "FIRST";
    case StepType::mid: return "MID";
    case StepType::last: return "LAST";
  }
  return "?";
}

DatasetSchema schema_for(const Environment& env, FeatureSpec step_metadata,
                         FeatureSpec episode_metadata) {
  DatasetSchema schema;
  schema.observation = env.observation_spec();
  schema.action = env.action_spec();
  schema.reward = env.reward_spec();
  schema.discount = env.discount_spec();
  schema.step_metadata = std::move(step_metadata);
  schema.episode_metadata = std::move(episode_metadata);
  return schema;
}

}  // namespace epilogue::env
