#pragma once

// On-disk layout of .rlds files (all integers little-endian):
//
//   "RLDS" | u32 version | u32 schema_len | schema | u32 dsmeta_len | dsmeta
//   chunk*
//   footer: u32 entry_count | entry* | episode metadata blobs
//   u64 footer_offset | "SDLR"
//
// chunk: u8 compression | u32 record_count | u32 uncompressed_len
//        | u32 payload_len | u32 crc32(payload) | payload
//
// A chunk payload is a sequence of records. Step record: 0x00 | flags
// (bit0 is_first, bit1 is_last, bit2 is_terminal) | action | discount
// | observation | reward | step metadata. Episode boundary: 0x01 | episode
// metadata. Leaves are written in canonical schema order; fixed-extent
// numeric leaves as raw row-major bytes, a variable first extent as a varint
// prefix, bytes values as varint length + data.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "epilogue/core/step.hpp"

namespace epilogue::store {

inline constexpr std::array<std::uint8_t, 4> kMagic = {'R', 'L', 'D', 'S'};
inline constexpr std::array<std::uint8_t, 4> kTrailerMagic = {'S', 'D', 'L', 'R'};
inline constexpr std::uint32_t kVersion = 1;
inline constexpr std::size_t kChunkHeaderSize = 17;
inline constexpr std::size_t kIndexEntrySize = 36;
inline constexpr std::size_t kTrailerSize = 12;
inline constexpr std::size_t kDefaultTargetChunkBytes = 262144;

enum class Compression : std::uint8_t { none = 0, deflate = 1 };
enum class RecordType : std::uint8_t { step = 0x00, episode_end = 0x01 };

struct IndexEntry {
  std::uint64_t episode_number = 0;
  std::uint64_t chunk_offset = 0;
  std::uint32_t record_ordinal = 0;
  std::uint64_t num_steps = 0;
  std::uint64_t metadata_offset = 0;

  bool operator==(const IndexEntry&) const = default;
};

struct ChunkHeader {
  Compression compression = Compression::none;
  std::uint32_t record_count = 0;
  std::uint32_t uncompressed_len = 0;
  std::uint32_t payload_len = 0;
  std::uint32_t crc32 = 0;
};

class ByteWriter {
 public:
  explicit ByteWriter(std::vector<std::uint8_t>& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) { fixed(v, 4); }
  void u64(std::uint64_t v) { fixed(v, 8); }
  void varint(std::uint64_t v) {
    while (v >= 0x80) {
      out_.push_back(static_cast<std::uint8_t>(v | 0x80));
      v >>= 7;
    }
    out_.push_back(static_cast<std::uint8_t>(v));
  }
  void bytes(std::span<const std::uint8_t> data) { out_.insert(out_.end(), data.begin(), data.end()); }
  void bytes(std::string_view data) { out_.insert(out_.end(), data.begin(), data.end()); }

 private:
  void fixed(std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t>& out_;
};

/// Bounds-checked cursor; any overrun raises CORRUPT_RECORD.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint8_t u8();
  std::uint32_t u32() { return static_cast<std::uint32_t>(fixed(4)); }
  std::uint64_t u64() { return fixed(8); }
  std::uint64_t varint();
  std::span<const std::uint8_t> bytes(std::uint64_t n);
  void skip(std::uint64_t n) { bytes(n); }

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  bool at_end() const { return pos_ == data_.size(); }

 private:
  std::uint64_t fixed(int width);
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

void encode_chunk_header(const ChunkHeader& header, std::vector<std::uint8_t>& out);
ChunkHeader decode_chunk_header(std::span<const std::uint8_t> bytes);

// Values must already conform to the schema.
void encode_nested(const Nested& value, const FeatureSpec& spec, ByteWriter& out);
Nested decode_nested(const FeatureSpec& spec, ByteReader& in);
void skip_nested(const FeatureSpec& spec, ByteReader& in);

void encode_step(const StepRecord& step, const DatasetSchema& schema, std::vector<std::uint8_t>& out);
void encode_episode_end(const Nested& metadata, const DatasetSchema& schema,
                        std::vector<std::uint8_t>& out);

// Decode the body of a step record (after its type byte).
StepRecord decode_step_body(const DatasetSchema& schema, ByteReader& in);
void skip_step_body(const DatasetSchema& schema, ByteReader& in);

std::uint32_t crc32(std::span<const std::uint8_t> data);
std::vector<std::uint8_t> deflate_raw(std::span<const std::uint8_t> data);
// Throws CORRUPT_RECORD when the stream is malformed or inflates to a length
// other than expected_len.
std::vector<std::uint8_t> inflate_raw(std::span<const std::uint8_t> data, std::size_t expected_len);

}  // namespace epilogue::store
