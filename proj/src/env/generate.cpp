#include "epilogue/env/generate.hpp"

namespace epilogue::env {

GenerateSummary generate(Environment& env, const Policy& policy, std::uint64_t episodes,
                         std::uint64_t seed, EpisodeSink& sink, StepMetadataFn step_metadata,
                         EpisodeMetadataFn episode_metadata) {
  if (episodes == 0) fail(ErrorCode::invalid_argument, "episodes must be at least 1");
  env.seed(seed * 2 + 1);
  Rng agent_rng(seed * 2 + 2);
  auto recorder = record(env, sink, std::move(step_metadata), std::move(episode_metadata));
  for (std::uint64_t e = 0; e < episodes; ++e) {
    TimeStep ts = recorder.reset();
    while (!ts.last()) ts = recorder.step(policy(ts.observation, agent_rng));
  }
  return GenerateSummary{recorder.episodes_recorded(), recorder.steps_recorded()};
}

}  // namespace epilogue::env
