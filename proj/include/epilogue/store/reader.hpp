#pragma once

#include <filesystem>
#include <memory>
#include <utility>

#include "epilogue/core/stream.hpp"
#include "epilogue/store/format.hpp"

namespace epilogue::store {

struct RecoveryReport {
  std::uint64_t episodes_recovered = 0;
  // Bytes between the end of the last intact chunk and the end of the chunk
  // region (the footer of an intact file is not counted).
  std::uint64_t bytes_discarded = 0;
  // Steps of a trailing episode that never reached its boundary marker.
  std::uint64_t steps_discarded = 0;
  bool footer_present = false;
};

/// Read-only view of an .rlds file. Copies share the open file; concurrent
/// use from several threads is safe and iterators are independent.
class Reader {
 public:
  static Reader open(const std::filesystem::path& path);

  /// Rebuilds the episode index by scanning chunks, ignoring the footer.
  /// Stops at the first chunk that is truncated or fails its CRC and drops a
  /// trailing episode without a boundary marker.
  static std::pair<Reader, RecoveryReport> recover(const std::filesystem::path& path);

  std::uint64_t episode_count() const;
  std::uint64_t total_steps() const;
  const DatasetSchema& schema() const;
  const std::vector<IndexEntry>& index() const;
  std::uint64_t header_size() const;
  const std::filesystem::path& path() const;

  const Nested& episode_metadata(std::uint64_t episode) const;
  EpisodeRecord get_episode(std::uint64_t episode) const;
  StepRecord get_step(std::uint64_t episode, std::uint64_t step) const;

  Stream<EpisodeRecord> iter_episodes() const;
  Stream<StepRecord> iter_steps() const;

  struct State;

 private:
  explicit Reader(std::shared_ptr<const State> state) : state_(std::move(state)) {}
  std::shared_ptr<const State> state_;
};

}  // namespace epilogue::store
