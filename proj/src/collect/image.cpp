#include "epilogue/collect/image.hpp"

#include <png.h>

#include <csetjmp>
#include <cstring>

namespace epilogue::collect {

bool is_image_spec(const LeafSpec& spec) {
  return spec.dtype == DType::u8 && spec.shape.size() == 3 && (spec.shape[2] == 3 || spec.shape[2] == 4);
}

bool is_image(const Tensor& t) {
  return t.dtype() == DType::u8 && t.rank() == 3 && (t.shape()[2] == 3 || t.shape()[2] == 4);
}

namespace {

void on_png_warning(png_structp, png_const_charp) {}

void append_bytes(png_structp png, png_bytep data, png_size_t len) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + len);
}

struct ReadCursor {
  const std::vector<std::uint8_t>* bytes;
  std::size_t pos;
};

void read_bytes(png_structp png, png_bytep data, png_size_t len) {
  auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cur->pos + len > cur->bytes->size()) png_error(png, "truncated PNG");
  std::memcpy(data, cur->bytes->data() + cur->pos, len);
  cur->pos += len;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const Tensor& image, int compression_level) {
  if (!is_image(image)) fail(ErrorCode::invalid_argument, "PNG frames must be u8 [H, W, 3|4]");
  const auto h = static_cast<png_uint_32>(image.shape()[0]);
  const auto w = static_cast<png_uint_32>(image.shape()[1]);
  const auto channels = static_cast<std::size_t>(image.shape()[2]);
  if (h == 0 || w == 0) fail(ErrorCode::invalid_argument, "empty image");

  std::vector<std::uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, on_png_warning);
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* png;
    png_infop* info;
    ~Guard() { png_destroy_write_struct(png, info); }
  } guard{&png, &info};
  // libpng reports errors by longjmp; only trivially destructible locals
  // are created past this point.
  if (setjmp(png_jmpbuf(png))) fail(ErrorCode::invalid_argument, "PNG encoding failed");
  png_set_write_fn(png, &out, append_bytes, nullptr);
  png_set_compression_level(png, compression_level);
  png_set_filter(png, 0, PNG_FILTER_SUB);
  png_set_IHDR(png, info, w, h, 8, channels == 4 ? PNG_COLOR_TYPE_RGBA : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const auto raw = image.raw();
  const std::size_t stride = w * channels;
  for (png_uint_32 row = 0; row < h; ++row) {
    png_write_row(png, const_cast<png_bytep>(raw.data() + row * stride));
  }
  png_write_end(png, nullptr);
  return out;
}

Tensor decode_png(const std::vector<std::uint8_t>& bytes) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, on_png_warning);
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* png;
    png_infop* info;
    ~Guard() { png_destroy_read_struct(png, info, nullptr); }
  } guard{&png, &info};
  ReadCursor cursor{&bytes, 0};
  std::vector<std::uint8_t> raw;
  if (setjmp(png_jmpbuf(png))) fail(ErrorCode::invalid_argument, "PNG decoding failed");
  png_set_read_fn(png, &cursor, read_bytes);
  png_read_info(png, info);
  const auto w = png_get_image_width(png, info);
  const auto h = png_get_image_height(png, info);
  const auto channels = png_get_channels(png, info);
  if (png_get_bit_depth(png, info) != 8 || (channels != 3 && channels != 4)) {
    png_error(png, "only 8-bit RGB/RGBA PNGs are supported");
  }
  raw.resize(static_cast<std::size_t>(w) * h * channels);
  for (png_uint_32 row = 0; row < h; ++row) png_read_row(png, raw.data() + row * w * channels, nullptr);
  return Tensor::from_raw(DType::u8, {h, w, channels}, std::move(raw));
}

}  // namespace epilogue::collect
