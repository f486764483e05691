#pragma once

#include <functional>

#include "epilogue/core/stream.hpp"
#include "epilogue/core/step.hpp"

namespace epilogue::transforms {

using StepFn = std::function<StepRecord(StepRecord)>;
using EpisodeFn = std::function<EpisodeRecord(EpisodeRecord)>;

/// Applies fn to every step of every episode, keeping order and episode
/// structure. An exception thrown by fn is rethrown as Error with
/// `coordinates` set to (episode index, step index); Error codes are kept,
/// anything else becomes INVALID_ARGUMENT.
Stream<EpisodeRecord> map_steps(Stream<EpisodeRecord> dataset, StepFn fn);

// As map_steps, per episode; coordinates carry step 0.
Stream<EpisodeRecord> apply_episodes(Stream<EpisodeRecord> dataset, EpisodeFn fn);

// Flattens an episode stream into its steps.
Stream<StepRecord> steps_of(Stream<EpisodeRecord> dataset);

}  // namespace epilogue::transforms
