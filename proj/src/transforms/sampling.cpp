#include "epilogue/transforms/sampling.hpp"

namespace epilogue::transforms {

Stream<EpisodeRecord> sample_episodes(Stream<EpisodeRecord> dataset, std::uint32_t buffer,
                                      std::uint64_t seed, std::uint64_t k) {
  if (buffer == 0) fail(ErrorCode::invalid_argument, "shuffle buffer must be positive");
  if (k == 0) return Stream<EpisodeRecord>();
  return windowed_shuffle(std::move(dataset), buffer, seed).take(k);
}

}  // namespace epilogue::transforms
