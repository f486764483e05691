#pragma once

#include <filesystem>
#include <memory>

#include "epilogue/store/format.hpp"

namespace epilogue::store {

namespace detail {
class FileHandle;
}

struct WriterOptions {
  Compression compression = Compression::deflate;
  // A chunk is flushed once its buffered records exceed this many bytes.
  std::size_t target_chunk_bytes = kDefaultTargetChunkBytes;
  // finalize() and a fresh is_first step close an episode whose last step
  // has is_last set, with zero-filled episode metadata.
  bool auto_commit = true;
};

struct WriteSummary {
  std::uint64_t episodes = 0;
  std::uint64_t steps = 0;
  std::uint64_t bytes = 0;
  bool operator==(const WriteSummary&) const = default;
};

/// Appends episodes to a new .rlds file. Single producer; not thread-safe.
/// Destroying an unfinalized writer attempts finalize() and leaves a
/// footerless (recoverable) file if that fails.
class Writer final : public EpisodeSink {
 public:
  Writer(const std::filesystem::path& path, DatasetSchema schema, WriterOptions options = {});
  Writer(const Writer&) = delete;
  Writer& operator=(const Writer&) = delete;
  Writer(Writer&&) noexcept;
  Writer& operator=(Writer&&) noexcept;
  ~Writer() override;

  const DatasetSchema& schema() const override { return schema_; }
  void append_step(const StepRecord& step) override;
  void end_episode(const Nested& metadata) override;
  WriteSummary finalize();

  std::uint64_t chunks_written() const { return chunks_written_; }
  std::uint64_t episodes_committed() const { return index_.size(); }
  bool closed() const { return closed_; }

 private:
  void require_open() const;
  void commit_episode(const Nested& metadata);
  void add_record();
  void flush_chunk();

  DatasetSchema schema_;
  WriterOptions options_;
  std::unique_ptr<detail::FileHandle> file_;
  std::uint64_t file_offset_ = 0;
  std::vector<std::uint8_t> chunk_;
  std::uint32_t chunk_records_ = 0;
  std::uint64_t chunks_written_ = 0;

  std::vector<IndexEntry> index_;
  std::vector<std::uint8_t> metadata_blobs_;
  std::vector<std::uint8_t> scratch_;

  // Current episode.
  std::uint64_t episode_steps_ = 0;
  bool last_step_was_last_ = false;
  IndexEntry pending_entry_;
  std::uint64_t total_steps_ = 0;
  bool closed_ = false;
};

}  // namespace epilogue::store
