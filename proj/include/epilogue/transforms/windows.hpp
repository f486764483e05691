#pragma once

#include <functional>

#include "epilogue/core/stream.hpp"
#include "epilogue/core/step.hpp"

namespace epilogue::transforms {

using StepWindow = std::vector<StepRecord>;
using StepPredicate = std::function<bool(const StepRecord&)>;

/// Sliding windows of `size` steps starting every `shift` steps over the steps
/// of a single episode (so windows never straddle episodes). Trailing windows
/// shorter than `size` are emitted only when drop_remainder is false. Holds at
/// most `size` steps. INVALID_ARGUMENT if size or shift is zero.
Stream<StepWindow> batch_steps(Stream<StepRecord> steps, std::uint32_t size, std::uint32_t shift,
                               bool drop_remainder = true);

struct Transition {
  Nested s_cur;
  Nested a;
  Nested r;
  Nested s_next;
  bool operator==(const Transition&) const = default;
};

// (o_k, a_k, r_k, o_{k+1}) for each pair of consecutive SAR steps.
Stream<Transition> make_transitions(Stream<StepRecord> steps);
Stream<Transition> make_transitions(const EpisodeRecord& episode);

/// Yields steps up to and including the first one satisfying cond, then stops
/// pulling from the input.
Stream<StepRecord> truncate_after_condition(Stream<StepRecord> steps, StepPredicate cond);

/// Appends `count` copies of `padding` with all flags cleared.
Stream<StepRecord> pad_steps(Stream<StepRecord> steps, std::uint32_t count, StepRecord padding);

// Zero-filled step over the full step schema, flags cleared.
StepRecord empty_step(const DatasetSchema& schema);

using ExtraSteps = std::function<Stream<StepRecord>(const StepRecord&)>;

/// If the last step is terminal, appends make_extra_steps(last step);
/// otherwise returns the episode unchanged.
EpisodeRecord concat_if_terminal(EpisodeRecord episode, const ExtraSteps& make_extra_steps);

// make_extra_steps that repeats its input once.
ExtraSteps duplicate_step();

}  // namespace epilogue::transforms
