#include "epilogue/store/writer.hpp"

#include "epilogue/core/validate.hpp"
#include "file.hpp"

namespace epilogue::store {

Writer::Writer(const std::filesystem::path& path, DatasetSchema schema, WriterOptions options)
    : schema_(std::move(schema)), options_(options) {
  validate_schema(schema_);
  if (options_.target_chunk_bytes == 0) {
    fail(ErrorCode::invalid_argument, "target_chunk_bytes must be positive");
  }
  file_ = std::make_unique<detail::FileHandle>(path, O_WRONLY | O_CREAT | O_TRUNC);

  std::vector<std::uint8_t> header;
  ByteWriter w(header);
  w.bytes(kMagic);
  w.u32(kVersion);
  auto schema_doc = canonical_schema_document(schema_);
  auto meta_doc = canonical_dump(schema_.dataset_metadata);
  w.u32(static_cast<std::uint32_t>(schema_doc.size()));
  w.bytes(std::string_view(schema_doc));
  w.u32(static_cast<std::uint32_t>(meta_doc.size()));
  w.bytes(std::string_view(meta_doc));
  file_->write_all(header);
  file_offset_ = header.size();
  chunk_.reserve(options_.target_chunk_bytes + 1024);
}

Writer::Writer(Writer&&) noexcept = default;
Writer& Writer::operator=(Writer&&) noexcept = default;

Writer::~Writer() {
  if (!file_ || closed_) return;
  try {
    finalize();
  } catch (...) {
    // leave the file footerless; recover() can still read the chunks
  }
}

void Writer::require_open() const {
  if (closed_ || !file_) fail(ErrorCode::writer_closed, "writer has been finalized");
}

void Writer::append_step(const StepRecord& step) {
  require_open();
  if (auto err = step_schema_error(step, schema_)) fail(ErrorCode::schema_mismatch, *err);
  if (step.is_terminal && !step.is_last) {
    fail(ErrorCode::flag_sequence_violation, "is_terminal step without is_last");
  }
  if (episode_steps_ > 0 && last_step_was_last_) {
    if (!step.is_first) {
      fail(ErrorCode::flag_sequence_violation, "step after is_last must have is_first");
    }
    if (!options_.auto_commit) {
      fail(ErrorCode::flag_sequence_violation, "previous episode was not ended");
    }
    commit_episode(undefined_fill(schema_.episode_metadata));
  }
  if (episode_steps_ == 0 && !step.is_first) {
    fail(ErrorCode::flag_sequence_violation, "first step of an episode must have is_first");
  }
  if (episode_steps_ > 0 && step.is_first) {
    fail(ErrorCode::flag_sequence_violation, "is_first inside an episode that has not ended");
  }

  if (episode_steps_ == 0) {
    pending_entry_ = IndexEntry{index_.size(), file_offset_, chunk_records_, 0, 0};
  }
  encode_step(step, schema_, chunk_);
  ++episode_steps_;
  ++total_steps_;
  last_step_was_last_ = step.is_last;
  add_record();
}

void Writer::end_episode(const Nested& metadata) {
  require_open();
  if (episode_steps_ == 0) fail(ErrorCode::dangling_episode, "no steps in the current episode");
  if (!last_step_was_last_) fail(ErrorCode::dangling_episode, "last step of the episode lacks is_last");
  if (auto err = conformance_error(metadata, schema_.episode_metadata)) {
    fail(ErrorCode::schema_mismatch, "episode metadata: " + *err);
  }
  commit_episode(metadata);
}

void Writer::commit_episode(const Nested& metadata) {
  pending_entry_.num_steps = episode_steps_;
  pending_entry_.metadata_offset = metadata_blobs_.size();
  ByteWriter blob(metadata_blobs_);
  encode_nested(metadata, schema_.episode_metadata, blob);
  index_.push_back(pending_entry_);
  episode_steps_ = 0;
  last_step_was_last_ = false;

  encode_episode_end(metadata, schema_, chunk_);
  add_record();
}

void Writer::add_record() {
  ++chunk_records_;
  if (chunk_.size() > options_.target_chunk_bytes) flush_chunk();
}

void Writer::flush_chunk() {
  if (chunk_records_ == 0) return;
  ChunkHeader header;
  header.record_count = chunk_records_;
  header.uncompressed_len = static_cast<std::uint32_t>(chunk_.size());
  std::vector<std::uint8_t> compressed;
  std::span<const std::uint8_t> payload = chunk_;
  if (options_.compression == Compression::deflate) {
    compressed = deflate_raw(chunk_);
    if (compressed.size() < chunk_.size()) {
      header.compression = Compression::deflate;
      payload = compressed;
    }
  }
  header.payload_len = static_cast<std::uint32_t>(payload.size());
  header.crc32 = crc32(payload);

  scratch_.clear();
  encode_chunk_header(header, scratch_);
  scratch_.insert(scratch_.end(), payload.begin(), payload.end());
  file_->write_all(scratch_);
  file_offset_ += scratch_.size();
  ++chunks_written_;
  chunk_.clear();
  chunk_records_ = 0;
}

WriteSummary Writer::finalize() {
  require_open();
  if (episode_steps_ > 0) {
    if (!options_.auto_commit || !last_step_was_last_) {
      fail(ErrorCode::dangling_episode, "finalize with an open episode");
    }
    commit_episode(undefined_fill(schema_.episode_metadata));
  }
  flush_chunk();

  std::vector<std::uint8_t> footer;
  ByteWriter w(footer);
  std::uint64_t footer_offset = file_offset_;
  w.u32(static_cast<std::uint32_t>(index_.size()));
  for (const auto& e : index_) {
    w.u64(e.episode_number);
    w.u64(e.chunk_offset);
    w.u32(e.record_ordinal);
    w.u64(e.num_steps);
    w.u64(e.metadata_offset);
  }
  w.bytes(metadata_blobs_);
  w.u64(footer_offset);
  w.bytes(kTrailerMagic);
  file_->write_all(footer);
  file_offset_ += footer.size();
  file_->sync();
  file_->close();
  closed_ = true;
  return WriteSummary{index_.size(), total_steps_, file_offset_};
}

}  // namespace epilogue::store
