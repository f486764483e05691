#pragma once

#include <cstdint>
#include <vector>

#include "epilogue/core/schema.hpp"

namespace epilogue::collect {

/// PNG bytes of a u8 [H, W, 3] (RGB) or [H, W, 4] (RGBA) tensor.
/// INVALID_ARGUMENT for other dtypes or shapes.
std::vector<std::uint8_t> encode_png(const Tensor& image, int compression_level = 1);

// Decodes to u8 [H, W, C]; used by tests to check frames.
Tensor decode_png(const std::vector<std::uint8_t>& png);

// u8 rank-3 tensors whose last extent is 3 or 4.
bool is_image(const Tensor& tensor);
bool is_image_spec(const LeafSpec& spec);

}  // namespace epilogue::collect
