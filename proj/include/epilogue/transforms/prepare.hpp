#pragma once

#include <string>
#include <vector>

#include "epilogue/core/step.hpp"

namespace epilogue::transforms {

/// Keeps the listed observation leaves and concatenates them, flattened
/// row-major and in list order, into one rank-1 observation. The output
/// dtype is the common dtype of the leaves, or f64 when they differ.
/// UNKNOWN_FIELD for a missing path, UNSUPPORTED_DTYPE for bytes.
Nested flatten_observation(const Nested& observation, const std::vector<std::string>& paths);
StepRecord flatten_observation(StepRecord step, const std::vector<std::string>& paths);

// Schema after flatten_observation; the listed leaves must have fixed extents.
DatasetSchema flattened_schema(DatasetSchema schema, const std::vector<std::string>& paths);

}  // namespace epilogue::transforms
