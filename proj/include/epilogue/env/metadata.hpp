#pragma once

#include <vector>

#include "epilogue/env/recorder.hpp"

namespace epilogue::env {

/// Step metadata {"image": env.render()}: the frame showing the step's
/// observation. The spec needs a fixed render_spec(), else INVALID_ARGUMENT.
StepMetadataFn render_metadata();
FeatureSpec render_metadata_spec(const Environment& env);

/// Step metadata {"tag:placed": bool} for GridPickPlace, true only on the
/// first step of an episode whose observation has the can resting on the
/// bin (the step after the rewarded drop).
StepMetadataFn placed_tag_metadata();
FeatureSpec placed_tag_metadata_spec();

// Merges the trees produced by several step metadata callbacks.
StepMetadataFn combine_metadata(std::vector<StepMetadataFn> parts);
FeatureSpec combine_specs(const std::vector<FeatureSpec>& parts);

}  // namespace epilogue::env
