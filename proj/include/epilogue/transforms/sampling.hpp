#pragma once

#include "epilogue/core/random.hpp"
#include "epilogue/core/stream.hpp"
#include "epilogue/core/step.hpp"

namespace epilogue::transforms {

/// Windowed shuffle: keep a buffer of up to `buffer` items, emit one chosen
/// uniformly by SplitMix64(seed).below(size) and put the next input item in
/// its slot; once the input is exhausted the last buffered item moves into
/// the emptied slot. buffer == 1 preserves order. Same seed, same order.
template <class T>
Stream<T> windowed_shuffle(Stream<T> input, std::uint32_t buffer, std::uint64_t seed) {
  if (buffer == 0) fail(ErrorCode::invalid_argument, "shuffle buffer must be positive");
  struct State {
    Stream<T> input;
    std::vector<T> items;
    SplitMix64 rng;
    bool filled = false;
    bool exhausted = false;
  };
  auto st = std::make_shared<State>(State{std::move(input), {}, SplitMix64(seed)});
  return Stream<T>([st, buffer]() -> std::optional<T> {
    auto pull = [&]() -> std::optional<T> {
      if (st->exhausted) return std::nullopt;
      auto item = st->input.next();
      if (!item) st->exhausted = true;
      return item;
    };
    if (!st->filled) {
      while (st->items.size() < buffer) {
        auto item = pull();
        if (!item) break;
        st->items.push_back(std::move(*item));
      }
      st->filled = true;
    }
    if (st->items.empty()) return std::nullopt;
    const auto j = static_cast<std::size_t>(st->rng.below(st->items.size()));
    T out = std::move(st->items[j]);
    if (auto refill = pull()) {
      st->items[j] = std::move(*refill);
    } else {
      if (j + 1 != st->items.size()) st->items[j] = std::move(st->items.back());
      st->items.pop_back();
    }
    return out;
  });
}

/// windowed_shuffle then the first k episodes. k == 0 pulls nothing.
Stream<EpisodeRecord> sample_episodes(Stream<EpisodeRecord> dataset, std::uint32_t buffer,
                                      std::uint64_t seed, std::uint64_t k);

}  // namespace epilogue::transforms
