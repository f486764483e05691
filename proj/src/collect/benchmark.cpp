#include "epilogue/collect/benchmark.hpp"

#include <chrono>

#include "epilogue/collect/image.hpp"
#include "epilogue/env/grid_pick_place.hpp"
#include "epilogue/env/metadata.hpp"
#include "epilogue/store/writer.hpp"

namespace epilogue::collect {
namespace {

using Seconds = std::chrono::duration<double>;

// Walks the agent around without ever finishing the task.
Nested wander(std::uint64_t i) {
  static constexpr std::int64_t kMoves[] = {0, 3, 1, 2};
  return Nested(Tensor::scalar(kMoves[i % 4]));
}

}  // namespace

OverheadReport measure_recording_overhead(const std::filesystem::path& dir, std::uint64_t steps) {
  std::filesystem::create_directories(dir);
  OverheadReport report;
  report.steps = steps;

  {
    DatasetSchema schema;
    schema.observation = FeatureSpec(LeafSpec{DType::f32, {4}});
    schema.action = scalar_spec(DType::i64);
    store::Writer writer(dir / "scalar.rlds", schema);
    StepRecord step;
    step.action = Nested(Tensor::scalar(std::int64_t{1}));
    step.reward = Nested(Tensor::scalar(0.0));
    step.discount = Nested(Tensor::scalar(1.0));
    const auto start = std::chrono::steady_clock::now();
    for (std::uint64_t i = 0; i < steps; ++i) {
      step.is_first = i == 0;
      step.is_last = i + 1 == steps;
      if (step.is_last) {
        step.action = Nested(Tensor::scalar(std::int64_t{0}));
        step.reward = Nested(Tensor::scalar(0.0));
        step.discount = Nested(Tensor::scalar(0.0));
      }
      const float x = static_cast<float>(i);
      step.observation = Nested(Tensor::vector(std::vector<float>{x, x + 1, x + 2, x + 3}));
      writer.append_step(step);
    }
    report.scalar_append_us = Seconds(std::chrono::steady_clock::now() - start).count() * 1e6 / steps;
    writer.end_episode({});
    writer.finalize();
  }

  {
    env::GridPickPlace::Config config;
    config.time_limit = static_cast<std::int64_t>(steps) + 1;
    config.cell_pixels = 20;
    env::GridPickPlace grid(config, 1);
    store::Writer writer(dir / "images.rlds", env::schema_for(grid, env::render_metadata_spec(grid)));
    Tensor frame;
    auto recorder = env::record(grid, writer, [&frame](const env::TimeStep&, env::Environment& e) {
      frame = e.render();
      return Nested{{"image", Nested(frame)}};
    });
    const auto start = std::chrono::steady_clock::now();
    recorder.reset();
    for (std::uint64_t i = 0; i < steps; ++i) {
      recorder.step(wander(i));
      report.image_height = static_cast<int>(frame.shape()[0]);
      report.image_width = static_cast<int>(frame.shape()[1]);
      auto png = encode_png(frame);
      (void)png;
    }
    recorder.close_episode();
    writer.finalize();
    report.image_step_ms = Seconds(std::chrono::steady_clock::now() - start).count() * 1e3 / steps;
  }
  return report;
}

}  // namespace epilogue::collect
