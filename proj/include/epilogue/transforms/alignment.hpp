#pragma once

#include "epilogue/core/stream.hpp"
#include "epilogue/core/validate.hpp"

namespace epilogue::transforms {

struct ShiftResult {
  EpisodeRecord episode;
  // Set when from == to; the episode is returned unchanged.
  bool already_in_target = false;
};

/// Regroups reward/discount between neighbouring steps.
///
/// SAR -> RSA: output step t keeps observation, action, metadata and flags of
/// input step t and takes reward/discount of input step t-1; step 0 gets the
/// undefined fill. RSA -> SAR is the exact inverse. Raises INVALID_EPISODE if
/// the input does not validate under `from`.
ShiftResult shift_alignment(const EpisodeRecord& episode, Alignment from, Alignment to,
                            const DatasetSchema& schema);

// Streaming form over the steps of one episode; buffers at most one step.
// Does not validate its input.
Stream<StepRecord> shift_alignment(Stream<StepRecord> steps, Alignment from, Alignment to,
                                   const DatasetSchema& schema);

}  // namespace epilogue::transforms
