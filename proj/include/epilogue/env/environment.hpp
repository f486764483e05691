#pragma once

#include <string_view>

#include "epilogue/core/schema.hpp"

namespace epilogue::env {

enum class StepType { first, mid, last };

std::string_view step_type_name(StepType type);

/// One environment transition as reported to the agent. reward and discount
/// are empty trees at FIRST. A LAST step with zero discount is terminal.
struct TimeStep {
  StepType step_type = StepType::first;
  Nested reward;
  Nested discount;
  Nested observation;

  bool first() const { return step_type == StepType::first; }
  bool last() const { return step_type == StepType::last; }
  bool operator==(const TimeStep&) const = default;
};

/// reset/step environment interface. After a LAST timestep, step() starts a
/// new episode and returns FIRST, exactly like reset().
class Environment {
 public:
  virtual ~Environment() = default;

  virtual FeatureSpec observation_spec() const = 0;
  virtual FeatureSpec action_spec() const = 0;
  virtual FeatureSpec reward_spec() const { return scalar_spec(DType::f64); }
  virtual FeatureSpec discount_spec() const { return scalar_spec(DType::f64); }

  virtual TimeStep reset() = 0;
  virtual TimeStep step(const Nested& action) = 0;
  // RGB frame, u8 [H, W, 3].
  virtual Tensor render() = 0;
  // Shape of render() when it is fixed.
  virtual std::optional<LeafSpec> render_spec() const { return std::nullopt; }
  virtual void seed(std::uint64_t seed) = 0;

  // Number of discrete actions for scalar integer action specs, 0 otherwise.
  virtual std::int64_t num_actions() const { return 0; }
};

// Schema with the environment's specs and the given metadata specs.
DatasetSchema schema_for(const Environment& env, FeatureSpec step_metadata = {},
                         FeatureSpec episode_metadata = {});

}  // namespace epilogue::env
