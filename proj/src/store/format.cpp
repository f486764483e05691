#include "epilogue/store/format.hpp"

#include <zlib.h>

#include <cstring>

namespace epilogue::store {

std::uint8_t ByteReader::u8() { return bytes(1)[0]; }

std::uint64_t ByteReader::fixed(int width) {
  auto b = bytes(static_cast<std::uint64_t>(width));
  std::uint64_t v = 0;
  for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t ByteReader::varint() {
  std::uint64_t v = 0;
  for (int shift = 0; shift < 64; shift += 7) {
    std::uint8_t b = u8();
    v |= static_cast<std::uint64_t>(b & 0x7f) << shift;
    if (!(b & 0x80)) return v;
  }
  fail(ErrorCode::corrupt_record, "varint longer than 10 bytes");
}

std::span<const std::uint8_t> ByteReader::bytes(std::uint64_t n) {
  if (n > remaining()) fail(ErrorCode::corrupt_record, "record extends past end of data");
  auto out = data_.subspan(pos_, n);
  pos_ += n;
  return out;
}

void encode_chunk_header(const ChunkHeader& header, std::vector<std::uint8_t>& out) {
  ByteWriter w(out);
  w.u8(static_cast<std::uint8_t>(header.compression));
  w.u32(header.record_count);
  w.u32(header.uncompressed_len);
  w.u32(header.payload_len);
  w.u32(header.crc32);
}

ChunkHeader decode_chunk_header(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  ChunkHeader h;
  auto compression = r.u8();
  if (compression > 1) fail(ErrorCode::corrupt_record, "unknown compression codec");
  h.compression = static_cast<Compression>(compression);
  h.record_count = r.u32();
  h.uncompressed_len = r.u32();
  h.payload_len = r.u32();
  h.crc32 = r.u32();
  return h;
}

namespace {

void encode_leaf(const Tensor& t, const LeafSpec& spec, ByteWriter& out) {
  if (spec.variable_first()) out.varint(static_cast<std::uint64_t>(t.shape()[0]));
  if (t.dtype() == DType::bytes) {
    for (const auto& s : t.strings()) {
      out.varint(s.size());
      out.bytes(std::string_view(s));
    }
  } else {
    out.bytes(t.raw());
  }
}

Shape resolved_shape(const LeafSpec& spec, ByteReader& in) {
  Shape shape = spec.shape;
  if (spec.variable_first()) {
    auto extent = in.varint();
    if (extent > (1ULL << 40)) fail(ErrorCode::corrupt_record, "implausible variable extent");
    shape[0] = static_cast<std::int64_t>(extent);
  }
  return shape;
}

Tensor decode_leaf(const LeafSpec& spec, ByteReader& in) {
  Shape shape = resolved_shape(spec, in);
  auto n = shape_elements(shape);
  if (spec.dtype == DType::bytes) {
    if (n > in.remaining()) fail(ErrorCode::corrupt_record, "string count exceeds record");
    std::vector<std::string> values(n);
    for (auto& v : values) {
      auto len = in.varint();
      auto b = in.bytes(len);
      v.assign(reinterpret_cast<const char*>(b.data()), b.size());
    }
    return Tensor::from_strings(std::move(shape), std::move(values));
  }
  auto b = in.bytes(n * dtype_size(spec.dtype));
  return Tensor::from_raw(spec.dtype, std::move(shape), std::vector<std::uint8_t>(b.begin(), b.end()));
}

void skip_leaf(const LeafSpec& spec, ByteReader& in) {
  auto n = shape_elements(resolved_shape(spec, in));
  if (spec.dtype == DType::bytes) {
    for (std::uint64_t i = 0; i < n; ++i) in.skip(in.varint());
  } else {
    in.skip(n * dtype_size(spec.dtype));
  }
}

}  // namespace

void encode_nested(const Nested& value, const FeatureSpec& spec, ByteWriter& out) {
  if (spec.is_leaf()) {
    encode_leaf(value.leaf(), spec.leaf(), out);
    return;
  }
  const auto& values = value.children();
  const auto& specs = spec.children();
  for (std::size_t i = 0; i < specs.size(); ++i) encode_nested(values[i].value, specs[i].value, out);
}

Nested decode_nested(const FeatureSpec& spec, ByteReader& in) {
  if (spec.is_leaf()) return Nested(decode_leaf(spec.leaf(), in));
  Nested node;
  for (const auto& e : spec.children()) node.set(e.name, decode_nested(e.value, in));
  return node;
}

void skip_nested(const FeatureSpec& spec, ByteReader& in) {
  if (spec.is_leaf()) {
    skip_leaf(spec.leaf(), in);
    return;
  }
  for (const auto& e : spec.children()) skip_nested(e.value, in);
}

void encode_step(const StepRecord& step, const DatasetSchema& schema, std::vector<std::uint8_t>& out) {
  ByteWriter w(out);
  w.u8(static_cast<std::uint8_t>(RecordType::step));
  w.u8(static_cast<std::uint8_t>((step.is_first ? 1 : 0) | (step.is_last ? 2 : 0) |
                                 (step.is_terminal ? 4 : 0)));
  encode_nested(step.action, schema.action, w);
  encode_nested(step.discount, schema.discount, w);
  encode_nested(step.observation, schema.observation, w);
  encode_nested(step.reward, schema.reward, w);
  encode_nested(step.metadata, schema.step_metadata, w);
}

void encode_episode_end(const Nested& metadata, const DatasetSchema& schema,
                        std::vector<std::uint8_t>& out) {
  ByteWriter w(out);
  w.u8(static_cast<std::uint8_t>(RecordType::episode_end));
  encode_nested(metadata, schema.episode_metadata, w);
}

StepRecord decode_step_body(const DatasetSchema& schema, ByteReader& in) {
  StepRecord step;
  auto flags = in.u8();
  if (flags & ~0x07) fail(ErrorCode::corrupt_record, "unknown step flag bits");
  step.is_first = flags & 1;
  step.is_last = flags & 2;
  step.is_terminal = flags & 4;
  step.action = decode_nested(schema.action, in);
  step.discount = decode_nested(schema.discount, in);
  step.observation = decode_nested(schema.observation, in);
  step.reward = decode_nested(schema.reward, in);
  step.metadata = decode_nested(schema.step_metadata, in);
  return step;
}

void skip_step_body(const DatasetSchema& schema, ByteReader& in) {
  if (in.u8() & ~0x07) fail(ErrorCode::corrupt_record, "unknown step flag bits");
  skip_nested(schema.action, in);
  skip_nested(schema.discount, in);
  skip_nested(schema.observation, in);
  skip_nested(schema.reward, in);
  skip_nested(schema.step_metadata, in);
}

std::uint32_t crc32(std::span<const std::uint8_t> data) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; chunk payloads are bounded by u32 anyway.
  return static_cast<std::uint32_t>(::crc32(crc, data.data(), static_cast<uInt>(data.size())));
}

std::vector<std::uint8_t> deflate_raw(std::span<const std::uint8_t> data) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, -15, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
    fail(ErrorCode::io_failure, "deflateInit2 failed");
  }
  std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(data.size())));
  zs.next_in = const_cast<Bytef*>(data.data());
  zs.avail_in = static_cast<uInt>(data.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  int rc = deflate(&zs, Z_FINISH);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) fail(ErrorCode::io_failure, "deflate did not finish");
  out.resize(zs.total_out);
  return out;
}

std::vector<std::uint8_t> inflate_raw(std::span<const std::uint8_t> data, std::size_t expected_len) {
  z_stream zs{};
  if (inflateInit2(&zs, -15) != Z_OK) fail(ErrorCode::io_failure, "inflateInit2 failed");
  std::vector<std::uint8_t> out(expected_len);
  zs.next_in = const_cast<Bytef*>(data.data());
  zs.avail_in = static_cast<uInt>(data.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  int rc = inflate(&zs, Z_FINISH);
  bool complete = rc == Z_STREAM_END && zs.total_out == expected_len && zs.avail_in == 0;
  inflateEnd(&zs);
  if (!complete) fail(ErrorCode::corrupt_record, "deflate stream is malformed or has the wrong length");
  return out;
}

}  // namespace epilogue::store
