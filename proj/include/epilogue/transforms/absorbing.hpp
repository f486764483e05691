#pragma once

#include "epilogue/core/stream.hpp"
#include "epilogue/core/step.hpp"

namespace epilogue::transforms {

/// Absorbing-state conversion for imitation learning. Terminal episodes get
/// their terminal step duplicated; every terminal step then has observation
/// and action zeroed and is_terminal/is_last cleared. Each observation gains
/// a trailing bit, 1 on those converted steps and 0 elsewhere, in the
/// observation's dtype.
///
/// Observations must be a single numeric rank-1 leaf, else
/// NON_VECTOR_OBSERVATION (raised when the offending episode is pulled).
Stream<EpisodeRecord> to_absorbing(Stream<EpisodeRecord> dataset);
EpisodeRecord to_absorbing(EpisodeRecord episode);

// Schema of to_absorbing output: observation extent grows by one.
DatasetSchema absorbing_schema(DatasetSchema schema);

}  // namespace epilogue::transforms
