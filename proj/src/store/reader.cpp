#include "epilogue/store/reader.hpp"

#include <cstring>
#include <deque>
#include <optional>

#include "file.hpp"

namespace epilogue::store {

struct Reader::State {
  detail::FileHandle file;
  std::filesystem::path path;
  DatasetSchema schema;
  std::uint64_t data_begin = 0;
  std::uint64_t data_end = 0;
  std::vector<IndexEntry> index;
  std::vector<Nested> metadata;
  std::uint64_t total_steps = 0;
};

namespace {

struct Header {
  DatasetSchema schema;
  std::uint64_t size = 0;
};

Header read_header(const detail::FileHandle& file) {
  auto file_size = file.size();
  if (file_size < 8) fail(ErrorCode::bad_magic, file.path() + " is too short to be an .rlds file");
  auto head = file.read_at(0, 8);
  if (!std::equal(kMagic.begin(), kMagic.end(), head.begin())) {
    fail(ErrorCode::bad_magic, file.path() + " does not start with RLDS");
  }
  ByteReader r(head);
  r.skip(4);
  if (auto version = r.u32(); version != kVersion) {
    fail(ErrorCode::unsupported_version, "format version " + std::to_string(version));
  }
  auto read_doc = [&](std::uint64_t& pos) {
    if (pos + 4 > file_size) fail(ErrorCode::corrupt_record, "header is truncated");
    auto len_bytes = file.read_at(pos, 4);
    ByteReader lr(len_bytes);
    std::uint64_t len = lr.u32();
    if (pos + 4 + len > file_size) fail(ErrorCode::corrupt_record, "header is truncated");
    auto doc = file.read_at(pos + 4, len);
    pos += 4 + len;
    return std::string(doc.begin(), doc.end());
  };
  std::uint64_t pos = 8;
  Header h;
  auto schema_doc = read_doc(pos);
  auto meta_doc = read_doc(pos);
  h.schema = schema_from_document(schema_doc);
  try {
    h.schema.dataset_metadata = nlohmann::json::parse(meta_doc);
  } catch (const nlohmann::json::exception&) {
    fail(ErrorCode::corrupt_record, "dataset metadata is not valid JSON");
  }
  validate_dataset_metadata(h.schema.dataset_metadata);
  h.size = pos;
  return h;
}

struct Chunk {
  std::uint64_t offset = 0;
  std::uint64_t next_offset = 0;
  std::uint32_t record_count = 0;
  std::vector<std::uint8_t> records;
};

// Loads and verifies one chunk. Throws CHUNK_CORRUPT carrying the offset.
Chunk load_chunk(const detail::FileHandle& file, std::uint64_t offset, std::uint64_t limit) {
  auto corrupt = [&](const std::string& why) {
    Error e(ErrorCode::chunk_corrupt, "chunk at offset " + std::to_string(offset) + ": " + why);
    e.offset = offset;
    throw e;
  };
  if (offset + kChunkHeaderSize > limit) corrupt("header extends past the chunk region");
  ChunkHeader h;
  try {
    h = decode_chunk_header(file.read_at(offset, kChunkHeaderSize));
  } catch (const Error& e) {
    corrupt(e.detail());
  }
  if (h.record_count == 0) corrupt("record count is zero");
  if (offset + kChunkHeaderSize + h.payload_len > limit) corrupt("payload extends past the chunk region");
  auto payload = file.read_at(offset + kChunkHeaderSize, h.payload_len);
  if (crc32(payload) != h.crc32) corrupt("CRC mismatch");
  Chunk c;
  c.offset = offset;
  c.next_offset = offset + kChunkHeaderSize + h.payload_len;
  c.record_count = h.record_count;
  if (h.compression == Compression::deflate) {
    try {
      c.records = inflate_raw(payload, h.uncompressed_len);
    } catch (const Error& e) {
      corrupt(e.detail());
    }
  } else {
    if (payload.size() != h.uncompressed_len) corrupt("length mismatch");
    c.records = std::move(payload);
  }
  return c;
}

struct Record {
  RecordType type;
  std::optional<StepRecord> step;  // when decoded
  std::optional<Nested> metadata;  // episode_end when decoded
  std::uint8_t flags = 0;          // step records, decoded or not
};

/// Sequential record reader across consecutive chunks.
class Cursor {
 public:
  Cursor(const Reader::State& state, std::uint64_t chunk_offset, std::uint32_t ordinal)
      : state_(&state), next_chunk_(chunk_offset) {
    load_next();
    for (std::uint32_t i = 0; i < ordinal; ++i) next(false);
  }

  // Returns the next record; step bodies are decoded only if `decode`.
  Record next(bool decode) {
    while (remaining_ == 0) load_next();
    --remaining_;
    try {
      Record rec;
      auto type = reader_->u8();
      if (type == static_cast<std::uint8_t>(RecordType::step)) {
        rec.type = RecordType::step;
        if (reader_->remaining() == 0) fail(ErrorCode::corrupt_record, "step record is empty");
        rec.flags = chunk_.records[reader_->position()];
        if (decode) {
          rec.step = decode_step_body(state_->schema, *reader_);
        } else {
          skip_step_body(state_->schema, *reader_);
        }
      } else if (type == static_cast<std::uint8_t>(RecordType::episode_end)) {
        rec.type = RecordType::episode_end;
        if (decode) {
          rec.metadata = decode_nested(state_->schema.episode_metadata, *reader_);
        } else {
          skip_nested(state_->schema.episode_metadata, *reader_);
        }
      } else {
        fail(ErrorCode::corrupt_record, "unknown record type");
      }
      if (remaining_ == 0 && !reader_->at_end()) fail(ErrorCode::corrupt_record, "trailing bytes");
      return rec;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::corrupt_record) throw;
      Error err(ErrorCode::chunk_corrupt, "chunk at offset " + std::to_string(chunk_.offset) +
                                              ": " + e.detail());
      err.offset = chunk_.offset;
      throw err;
    }
  }

 private:
  void load_next() {
    if (next_chunk_ >= state_->data_end) {
      fail(ErrorCode::corrupt_record, "index points past the last chunk");
    }
    chunk_ = load_chunk(state_->file, next_chunk_, state_->data_end);
    next_chunk_ = chunk_.next_offset;
    reader_.emplace(chunk_.records);
    remaining_ = chunk_.record_count;
  }

  const Reader::State* state_;
  std::uint64_t next_chunk_;
  Chunk chunk_;
  std::optional<ByteReader> reader_;
  std::uint32_t remaining_ = 0;
};

// Reads one episode at the cursor and checks it against its index entry:
// flags in place and the boundary marker carrying the indexed metadata. The
// footer has no checksum of its own; this is what catches a damaged index.
EpisodeRecord read_verified(Cursor& cursor, const IndexEntry& entry, const Nested& metadata,
                            std::optional<std::uint64_t> only = std::nullopt) {
  auto disagree = [&](const std::string& why) {
    fail(ErrorCode::corrupt_record,
         "index entry " + std::to_string(entry.episode_number) + " disagrees with chunk records: " + why);
  };
  EpisodeRecord out;
  out.metadata = metadata;
  for (std::uint64_t j = 0; j < entry.num_steps; ++j) {
    auto rec = cursor.next(!only || *only == j);
    if (rec.type != RecordType::step) disagree("boundary before the indexed step count");
    const bool first = rec.flags & 1;
    const bool last = rec.flags & 2;
    if (first != (j == 0) || last != (j + 1 == entry.num_steps)) disagree("episode flags out of place");
    if (rec.step) out.steps.push_back(std::move(*rec.step));
  }
  auto boundary = cursor.next(true);
  if (boundary.type != RecordType::episode_end) disagree("no boundary after the last step");
  if (!(*boundary.metadata == metadata)) disagree("episode metadata differs");
  return out;
}

void parse_footer(Reader::State& state) {
  auto size = state.file.size();
  auto missing = [&](const std::string& why) { fail(ErrorCode::missing_footer, why); };
  if (size < state.data_begin + 4 + kTrailerSize) missing("file too short for a footer");
  auto trailer = state.file.read_at(size - kTrailerSize, kTrailerSize);
  if (!std::equal(kTrailerMagic.begin(), kTrailerMagic.end(), trailer.begin() + 8)) {
    missing("trailer magic not found");
  }
  ByteReader tr(trailer);
  std::uint64_t footer_offset = tr.u64();
  if (footer_offset < state.data_begin || footer_offset + 4 + kTrailerSize > size) {
    missing("footer offset out of range");
  }
  auto footer = state.file.read_at(footer_offset, size - kTrailerSize - footer_offset);
  ByteReader r(footer);
  try {
    std::uint64_t count = r.u32();
    if (count * kIndexEntrySize > r.remaining()) missing("index entries exceed footer");
    for (std::uint64_t i = 0; i < count; ++i) {
      IndexEntry e;
      e.episode_number = r.u64();
      e.chunk_offset = r.u64();
      e.record_ordinal = r.u32();
      e.num_steps = r.u64();
      e.metadata_offset = r.u64();
      if (e.episode_number != i || e.num_steps == 0 || e.chunk_offset < state.data_begin ||
          e.chunk_offset >= footer_offset) {
        missing("index entry " + std::to_string(i) + " is inconsistent");
      }
      state.index.push_back(e);
    }
    auto blobs = r.bytes(r.remaining());
    // Blobs tile the region in index order, so a shifted footer offset or a
    // damaged entry shows up here.
    ByteReader mr(blobs);
    for (const auto& e : state.index) {
      if (e.metadata_offset != mr.position()) missing("metadata offsets are not contiguous");
      state.metadata.push_back(decode_nested(state.schema.episode_metadata, mr));
      state.total_steps += e.num_steps;
    }
    if (!mr.at_end()) missing("unused bytes after the episode metadata");
    if (state.index.empty() && footer_offset != state.data_begin) missing("chunks present but the index is empty");
  } catch (const Error& e) {
    if (e.code() != ErrorCode::corrupt_record) throw;
    missing("footer is malformed: " + e.detail());
  }
  state.data_end = footer_offset;
}

std::shared_ptr<Reader::State> open_state(const std::filesystem::path& path) {
  auto state = std::make_shared<Reader::State>();
  state->file = detail::FileHandle(path, O_RDONLY);
  state->path = path;
  auto header = read_header(state->file);
  state->schema = std::move(header.schema);
  state->data_begin = header.size;
  return state;
}

}  // namespace

Reader Reader::open(const std::filesystem::path& path) {
  auto state = open_state(path);
  parse_footer(*state);
  return Reader(std::move(state));
}

std::pair<Reader, RecoveryReport> Reader::recover(const std::filesystem::path& path) {
  auto state = open_state(path);
  RecoveryReport report;

  std::uint64_t limit = state->file.size();
  {
    // An intact trailer bounds the chunk region; the footer itself is ignored.
    Reader::State probe;
    probe.file = detail::FileHandle(path, O_RDONLY);
    probe.schema = state->schema;
    probe.data_begin = state->data_begin;
    try {
      parse_footer(probe);
      limit = probe.data_end;
      report.footer_present = true;
    } catch (const Error&) {
    }
  }

  std::vector<std::uint8_t> blobs;
  std::uint64_t offset = state->data_begin;
  std::uint64_t good_end = offset;
  std::optional<IndexEntry> open_episode;
  while (offset < limit) {
    Chunk chunk;
    std::vector<IndexEntry> committed;
    std::vector<std::vector<std::uint8_t>> committed_meta;
    std::optional<IndexEntry> episode = open_episode;
    try {
      chunk = load_chunk(state->file, offset, limit);
      ByteReader r(chunk.records);
      for (std::uint32_t i = 0; i < chunk.record_count; ++i) {
        auto type = r.u8();
        if (type == static_cast<std::uint8_t>(RecordType::step)) {
          if (r.remaining() == 0) fail(ErrorCode::corrupt_record, "step record is empty");
          bool is_first = chunk.records[r.position()] & 1;
          skip_step_body(state->schema, r);
          if (is_first) episode = IndexEntry{0, offset, i, 0, 0};
          if (!episode) fail(ErrorCode::corrupt_record, "step outside an episode");
          ++episode->num_steps;
        } else if (type == static_cast<std::uint8_t>(RecordType::episode_end)) {
          auto start = r.position();
          skip_nested(state->schema.episode_metadata, r);
          if (!episode) fail(ErrorCode::corrupt_record, "boundary without steps");
          committed.push_back(*episode);
          committed_meta.emplace_back(chunk.records.begin() + static_cast<std::ptrdiff_t>(start),
                                      chunk.records.begin() + static_cast<std::ptrdiff_t>(r.position()));
          episode.reset();
        } else {
          fail(ErrorCode::corrupt_record, "unknown record type");
        }
      }
      if (!r.at_end()) fail(ErrorCode::corrupt_record, "trailing bytes in chunk");
    } catch (const Error&) {
      break;
    }
    for (std::size_t k = 0; k < committed.size(); ++k) {
      auto e = committed[k];
      e.episode_number = state->index.size();
      e.metadata_offset = blobs.size();
      blobs.insert(blobs.end(), committed_meta[k].begin(), committed_meta[k].end());
      ByteReader mr(committed_meta[k]);
      state->metadata.push_back(decode_nested(state->schema.episode_metadata, mr));
      state->total_steps += e.num_steps;
      state->index.push_back(e);
    }
    open_episode = episode;
    offset = chunk.next_offset;
    good_end = offset;
  }
  report.bytes_discarded = limit - good_end;
  report.steps_discarded = open_episode ? open_episode->num_steps : 0;
  report.episodes_recovered = state->index.size();
  state->data_end = good_end;
  return {Reader(std::move(state)), report};
}

std::uint64_t Reader::episode_count() const { return state_->index.size(); }
std::uint64_t Reader::total_steps() const { return state_->total_steps; }
const DatasetSchema& Reader::schema() const { return state_->schema; }
const std::vector<IndexEntry>& Reader::index() const { return state_->index; }
std::uint64_t Reader::header_size() const { return state_->data_begin; }
const std::filesystem::path& Reader::path() const { return state_->path; }

const Nested& Reader::episode_metadata(std::uint64_t episode) const {
  if (episode >= state_->index.size()) {
    fail(ErrorCode::episode_out_of_range, "episode " + std::to_string(episode) + " of " +
                                              std::to_string(state_->index.size()));
  }
  return state_->metadata[episode];
}

EpisodeRecord Reader::get_episode(std::uint64_t episode) const {
  const Nested& metadata = episode_metadata(episode);
  const auto& entry = state_->index[episode];
  Cursor cursor(*state_, entry.chunk_offset, entry.record_ordinal);
  return read_verified(cursor, entry, metadata);
}

StepRecord Reader::get_step(std::uint64_t episode, std::uint64_t step) const {
  episode_metadata(episode);
  const auto& entry = state_->index[episode];
  if (step >= entry.num_steps) {
    fail(ErrorCode::step_out_of_range, "step " + std::to_string(step) + " of " +
                                           std::to_string(entry.num_steps));
  }
  // Walks the whole episode so the index entry is checked as well.
  Cursor cursor(*state_, entry.chunk_offset, entry.record_ordinal);
  return std::move(read_verified(cursor, entry, state_->metadata[episode], step).steps.front());
}

Stream<EpisodeRecord> Reader::iter_episodes() const {
  struct It {
    std::shared_ptr<const State> state;
    std::optional<Cursor> cursor;
    std::uint64_t next = 0;
  };
  auto it = std::make_shared<It>(It{state_, std::nullopt, 0});
  return Stream<EpisodeRecord>([it]() -> std::optional<EpisodeRecord> {
    const auto& index = it->state->index;
    if (it->next >= index.size()) return std::nullopt;
    const auto& entry = index[it->next];
    if (!it->cursor) it->cursor.emplace(*it->state, entry.chunk_offset, entry.record_ordinal);
    auto out = read_verified(*it->cursor, entry, it->state->metadata[it->next]);
    ++it->next;
    return out;
  });
}

Stream<StepRecord> Reader::iter_steps() const {
  struct It {
    std::shared_ptr<const State> state;
    std::optional<Cursor> cursor;
    std::uint64_t episode = 0;
    std::deque<StepRecord> pending;
  };
  auto it = std::make_shared<It>(It{state_, std::nullopt, 0, {}});
  // Episode by episode, so every step passes the same checks as get_episode.
  return Stream<StepRecord>([it]() -> std::optional<StepRecord> {
    const auto& state = *it->state;
    while (it->pending.empty()) {
      if (it->episode >= state.index.size()) return std::nullopt;
      const auto& entry = state.index[it->episode];
      if (!it->cursor) it->cursor.emplace(state, entry.chunk_offset, entry.record_ordinal);
      auto episode = read_verified(*it->cursor, entry, state.metadata[it->episode]);
      ++it->episode;
      it->pending.assign(std::make_move_iterator(episode.steps.begin()),
                         std::make_move_iterator(episode.steps.end()));
    }
    auto step = std::move(it->pending.front());
    it->pending.pop_front();
    return step;
  });
}

}  // namespace epilogue::store
