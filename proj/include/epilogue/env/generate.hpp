#pragma once

#include "epilogue/env/agents.hpp"
#include "epilogue/env/recorder.hpp"

namespace epilogue::env {

struct GenerateSummary {
  std::uint64_t episodes = 0;
  std::uint64_t steps = 0;
};

/// Runs `episodes` full episodes of policy in env, recording into sink.
/// Seeds are split from `seed`: the environment gets 2*seed+1 and the
/// policy's generator 2*seed+2, so output is a pure function of the inputs.
GenerateSummary generate(Environment& env, const Policy& policy, std::uint64_t episodes,
                         std::uint64_t seed, EpisodeSink& sink, StepMetadataFn step_metadata = {},
                         EpisodeMetadataFn episode_metadata = {});

}  // namespace epilogue::env
