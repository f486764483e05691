#pragma once

#include <functional>
#include <optional>

#include "epilogue/core/step.hpp"
#include "epilogue/env/environment.hpp"

namespace epilogue::env {

using StepMetadataFn = std::function<Nested(const TimeStep&, Environment&)>;
using EpisodeMetadataFn = std::function<Nested(Environment&)>;

/// Environment wrapper that forwards every call unchanged and logs the
/// interaction to a sink as SAR steps:
///
///   reset -> o0                 opens a pending step at o0
///   step(a) -> (r, g, o')       completes the pending step as (o, a, r, g)
///                               and opens a new pending step at o'
///   LAST                        commits the pending step with is_last (and
///                               is_terminal when the discount is zero) and
///                               zero-filled action/reward/discount, then
///                               ends the episode
///
/// Step metadata is computed when a step's observation arrives, so a render()
/// inside the callback shows that observation.
class RecordingEnvironment final : public Environment {
 public:
  RecordingEnvironment(Environment& env, EpisodeSink& sink, StepMetadataFn step_metadata = {},
                       EpisodeMetadataFn episode_metadata = {});

  FeatureSpec observation_spec() const override { return env_->observation_spec(); }
  FeatureSpec action_spec() const override { return env_->action_spec(); }
  FeatureSpec reward_spec() const override { return env_->reward_spec(); }
  FeatureSpec discount_spec() const override { return env_->discount_spec(); }
  TimeStep reset() override;
  TimeStep step(const Nested& action) override;
  Tensor render() override { return env_->render(); }
  std::optional<LeafSpec> render_spec() const override { return env_->render_spec(); }
  void seed(std::uint64_t seed) override { env_->seed(seed); }
  std::int64_t num_actions() const override { return env_->num_actions(); }

  /// Ends an open episode early: the pending step becomes the last step
  /// (is_last, not terminal). No-op when no episode is open.
  void close_episode();

  bool episode_open() const { return pending_.has_value(); }
  // Steps committed to the sink in the current episode.
  std::uint64_t episode_steps() const { return episode_steps_; }
  std::uint64_t episodes_recorded() const { return episodes_; }
  std::uint64_t steps_recorded() const { return total_steps_; }

 private:
  void open_pending(const TimeStep& ts);
  void commit_last(bool terminal);

  Environment* env_;
  EpisodeSink* sink_;
  StepMetadataFn step_metadata_;
  EpisodeMetadataFn episode_metadata_;
  std::optional<StepRecord> pending_;
  std::uint64_t episode_steps_ = 0;
  std::uint64_t episodes_ = 0;
  std::uint64_t total_steps_ = 0;
};

RecordingEnvironment record(Environment& env, EpisodeSink& sink, StepMetadataFn step_metadata = {},
                            EpisodeMetadataFn episode_metadata = {});

}  // namespace epilogue::env
