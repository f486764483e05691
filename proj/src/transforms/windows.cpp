#include "epilogue/transforms/windows.hpp"

#include <deque>

namespace epilogue::transforms {

Stream<StepWindow> batch_steps(Stream<StepRecord> steps, std::uint32_t size, std::uint32_t shift,
                               bool drop_remainder) {
  if (size == 0 || shift == 0) fail(ErrorCode::invalid_argument, "batch size and shift must be positive");
  struct State {
    Stream<StepRecord> input;
    std::deque<StepRecord> buffer;
    std::uint64_t to_skip = 0;  // input steps to discard before the next window
    bool exhausted = false;
  };
  auto st = std::make_shared<State>();
  st->input = std::move(steps);
  return Stream<StepWindow>([st, size, shift, drop_remainder]() -> std::optional<StepWindow> {
    auto pull = [&]() -> std::optional<StepRecord> {
      if (st->exhausted) return std::nullopt;
      auto item = st->input.next();
      if (!item) st->exhausted = true;
      return item;
    };
    while (st->to_skip > 0 && pull()) --st->to_skip;
    while (st->buffer.size() < size) {
      auto item = pull();
      if (!item) break;
      st->buffer.push_back(std::move(*item));
    }
    if (st->buffer.empty()) return std::nullopt;
    if (st->buffer.size() < size && drop_remainder) {
      st->buffer.clear();
      return std::nullopt;
    }
    StepWindow window(st->buffer.begin(), st->buffer.end());
    if (shift >= st->buffer.size()) {
      st->to_skip = shift - st->buffer.size();
      st->buffer.clear();
    } else {
      st->buffer.erase(st->buffer.begin(), st->buffer.begin() + shift);
    }
    return window;
  });
}

Stream<Transition> make_transitions(Stream<StepRecord> steps) {
  return batch_steps(std::move(steps), 2, 1, true).map([](StepWindow w) {
    return Transition{std::move(w[0].observation), std::move(w[0].action), std::move(w[0].reward),
                      std::move(w[1].observation)};
  });
}

Stream<Transition> make_transitions(const EpisodeRecord& episode) {
  return make_transitions(Stream<StepRecord>::from_vector(episode.steps));
}

Stream<StepRecord> truncate_after_condition(Stream<StepRecord> steps, StepPredicate cond) {
  auto done = std::make_shared<bool>(false);
  auto input = std::make_shared<Stream<StepRecord>>(std::move(steps));
  return Stream<StepRecord>([input, cond = std::move(cond), done]() -> std::optional<StepRecord> {
    if (*done) return std::nullopt;
    auto step = input->next();
    if (!step) return std::nullopt;
    if (cond(*step)) *done = true;
    return step;
  });
}

Stream<StepRecord> pad_steps(Stream<StepRecord> steps, std::uint32_t count, StepRecord padding) {
  padding.is_first = padding.is_last = padding.is_terminal = false;
  auto input = std::make_shared<Stream<StepRecord>>(std::move(steps));
  auto remaining = std::make_shared<std::uint32_t>(count);
  auto input_done = std::make_shared<bool>(false);
  return Stream<StepRecord>([=]() -> std::optional<StepRecord> {
    if (!*input_done) {
      if (auto step = input->next()) return step;
      *input_done = true;
    }
    if (*remaining == 0) return std::nullopt;
    --*remaining;
    return padding;
  });
}

StepRecord empty_step(const DatasetSchema& schema) {
  StepRecord s;
  s.observation = undefined_fill(schema.observation);
  s.action = undefined_fill(schema.action);
  s.reward = undefined_fill(schema.reward);
  s.discount = undefined_fill(schema.discount);
  s.metadata = undefined_fill(schema.step_metadata);
  return s;
}

EpisodeRecord concat_if_terminal(EpisodeRecord episode, const ExtraSteps& make_extra_steps) {
  if (episode.steps.empty() || !episode.steps.back().is_terminal) return episode;
  auto extra = make_extra_steps(episode.steps.back());
  while (auto step = extra.next()) episode.steps.push_back(std::move(*step));
  return episode;
}

ExtraSteps duplicate_step() {
  return [](const StepRecord& step) { return Stream<StepRecord>::from_vector({step}); };
}

}  // namespace epilogue::transforms
