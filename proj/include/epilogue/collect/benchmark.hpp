#pragma once

#include <filesystem>

namespace epilogue::collect {

struct OverheadReport {
  std::uint64_t steps = 0;
  // Writer append of a scalar-schema step, no images.
  double scalar_append_us = 0;
  // Full session path per step: environment step, render into the "image"
  // step metadata, PNG frame encoding and the writer append.
  double image_step_ms = 0;
  int image_height = 0;
  int image_width = 0;
};

/// Times the recording path with GridPickPlace at 160x160 RGB frames,
/// writing scratch files under `dir`.
OverheadReport measure_recording_overhead(const std::filesystem::path& dir, std::uint64_t steps = 2000);

}  // namespace epilogue::collect
