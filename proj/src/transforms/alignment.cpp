#include "epilogue/transforms/alignment.hpp"

namespace epilogue::transforms {

Stream<StepRecord> shift_alignment(Stream<StepRecord> steps, Alignment from, Alignment to,
                                   const DatasetSchema& schema) {
  if (from == to) return steps;
  struct State {
    Stream<StepRecord> input;
    Nested reward_fill;
    Nested discount_fill;
    // SAR -> RSA: reward/discount carried from the previous step.
    Nested carried_reward;
    Nested carried_discount;
    bool started = false;
    // RSA -> SAR: one step of lookahead.
    std::optional<StepRecord> ahead;
  };
  auto st = std::make_shared<State>();
  st->input = std::move(steps);
  st->reward_fill = undefined_fill(schema.reward);
  st->discount_fill = undefined_fill(schema.discount);

  if (from == Alignment::sar) {
    return Stream<StepRecord>([st]() -> std::optional<StepRecord> {
      auto step = st->input.next();
      if (!step) return std::nullopt;
      if (!st->started || step->is_first) {
        st->carried_reward = st->reward_fill;
        st->carried_discount = st->discount_fill;
        st->started = true;
      }
      std::swap(step->reward, st->carried_reward);
      std::swap(step->discount, st->carried_discount);
      return step;
    });
  }
  return Stream<StepRecord>([st]() -> std::optional<StepRecord> {
    if (!st->started) {
      st->ahead = st->input.next();
      st->started = true;
    }
    if (!st->ahead) return std::nullopt;
    StepRecord current = std::move(*st->ahead);
    st->ahead = st->input.next();
    if (st->ahead && !st->ahead->is_first) {
      current.reward = st->ahead->reward;
      current.discount = st->ahead->discount;
    } else {
      current.reward = st->reward_fill;
      current.discount = st->discount_fill;
    }
    return current;
  });
}

ShiftResult shift_alignment(const EpisodeRecord& episode, Alignment from, Alignment to,
                            const DatasetSchema& schema) {
  if (from == to) return ShiftResult{episode, true};
  auto report = validate_episode(episode, schema, from);
  if (!report.ok()) fail(ErrorCode::invalid_episode, report.to_string());
  ShiftResult out;
  out.episode.metadata = episode.metadata;
  out.episode.steps =
      shift_alignment(Stream<StepRecord>::from_vector(episode.steps), from, to, schema).collect();
  return out;
}

}  // namespace epilogue::transforms
