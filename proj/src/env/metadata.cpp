#include "epilogue/env/metadata.hpp"

#include <memory>

#include "epilogue/env/grid_pick_place.hpp"

namespace epilogue::env {

StepMetadataFn render_metadata() {
  return [](const TimeStep&, Environment& env) { return Nested{{"image", Nested(env.render())}}; };
}

FeatureSpec render_metadata_spec(const Environment& env) {
  auto spec = env.render_spec();
  if (!spec) fail(ErrorCode::invalid_argument, "environment has no fixed render shape");
  return FeatureSpec{{"image", FeatureSpec(*spec)}};
}

StepMetadataFn placed_tag_metadata() {
  auto seen = std::make_shared<bool>(false);
  return [seen](const TimeStep& ts, Environment&) {
    if (ts.first()) *seen = false;
    const auto s = GridPickPlace::decode_observation(ts.observation);
    const bool placed = s.can == s.bin && !s.holding;
    const bool tag = placed && !*seen;
    if (placed) *seen = true;
    return Nested{{"tag:placed", Nested(Tensor::scalar(tag))}};
  };
}

FeatureSpec placed_tag_metadata_spec() { return FeatureSpec{{"tag:placed", scalar_spec(DType::boolean)}}; }

StepMetadataFn combine_metadata(std::vector<StepMetadataFn> parts) {
  return [parts = std::move(parts)](const TimeStep& ts, Environment& env) {
    Nested out;
    for (const auto& part : parts) {
      Nested piece = part(ts, env);
      for (const auto& e : piece.children()) out.set(e.name, e.value);
    }
    return out;
  };
}

FeatureSpec combine_specs(const std::vector<FeatureSpec>& parts) {
  FeatureSpec out;
  for (const auto& part : parts) {
    for (const auto& e : part.children()) out.set(e.name, e.value);
  }
  return out;
}

}  // namespace epilogue::env
