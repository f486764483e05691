#include "epilogue/transforms/mapping.hpp"

#include <string>

namespace epilogue::transforms {
namespace {

[[noreturn]] void rethrow_at(std::uint64_t episode, std::uint64_t step, const std::string& where) {
  try {
    throw;
  } catch (const Error& e) {
    Error out(e.code(), where + ": " + e.detail());
    out.offset = e.offset;
    out.coordinates = StepCoordinates{episode, step};
    throw out;
  } catch (const std::exception& e) {
    Error out(ErrorCode::invalid_argument, where + ": " + e.what());
    out.coordinates = StepCoordinates{episode, step};
    throw out;
  }
}

}  // namespace

Stream<EpisodeRecord> map_steps(Stream<EpisodeRecord> dataset, StepFn fn) {
  auto index = std::make_shared<std::uint64_t>(0);
  return std::move(dataset).map([fn = std::move(fn), index](EpisodeRecord episode) {
    const std::uint64_t e = (*index)++;
    for (std::size_t s = 0; s < episode.steps.size(); ++s) {
      try {
        episode.steps[s] = fn(std::move(episode.steps[s]));
      } catch (...) {
        rethrow_at(e, s, "episode " + std::to_string(e) + " step " + std::to_string(s));
      }
    }
    return episode;
  });
}

Stream<EpisodeRecord> apply_episodes(Stream<EpisodeRecord> dataset, EpisodeFn fn) {
  auto index = std::make_shared<std::uint64_t>(0);
  return std::move(dataset).map([fn = std::move(fn), index](EpisodeRecord episode) {
    const std::uint64_t e = (*index)++;
    try {
      return fn(std::move(episode));
    } catch (...) {
      rethrow_at(e, 0, "episode " + std::to_string(e));
    }
  });
}

Stream<StepRecord> steps_of(Stream<EpisodeRecord> dataset) {
  return std::move(dataset).flat_map(
      [](EpisodeRecord episode) { return Stream<StepRecord>::from_vector(std::move(episode.steps)); });
}

}  // namespace epilogue::transforms
