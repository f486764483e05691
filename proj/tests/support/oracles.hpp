#pragma once

// Naive, fully materialized reference implementations of the transform
// operators. They index into vectors directly and share no code with the
// streaming versions.

#include <cmath>
#include <optional>
#include <vector>

#include "epilogue/core/random.hpp"
#include "epilogue/core/step.hpp"

namespace epilogue::oracle {

inline EpisodeRecord shift_sar_to_rsa(const EpisodeRecord& in, const DatasetSchema& schema) {
  EpisodeRecord out = in;
  for (std::size_t t = 0; t < in.steps.size(); ++t) {
    out.steps[t].reward = t == 0 ? undefined_fill(schema.reward) : in.steps[t - 1].reward;
    out.steps[t].discount = t == 0 ? undefined_fill(schema.discount) : in.steps[t - 1].discount;
  }
  return out;
}

inline EpisodeRecord shift_rsa_to_sar(const EpisodeRecord& in, const DatasetSchema& schema) {
  EpisodeRecord out = in;
  const std::size_t n = in.steps.size();
  for (std::size_t t = 0; t < n; ++t) {
    out.steps[t].reward = t + 1 == n ? undefined_fill(schema.reward) : in.steps[t + 1].reward;
    out.steps[t].discount = t + 1 == n ? undefined_fill(schema.discount) : in.steps[t + 1].discount;
  }
  return out;
}

inline std::vector<std::vector<StepRecord>> batch(const std::vector<StepRecord>& steps,
                                                  std::size_t size, std::size_t shift, bool drop) {
  std::vector<std::vector<StepRecord>> out;
  for (std::size_t start = 0; start < steps.size(); start += shift) {
    const std::size_t end = std::min(steps.size(), start + size);
    if (end - start < size && drop) break;
    out.emplace_back(steps.begin() + static_cast<std::ptrdiff_t>(start),
                     steps.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

struct Transition {
  Nested s_cur, a, r, s_next;
};

inline std::vector<Transition> transitions(const EpisodeRecord& e) {
  std::vector<Transition> out;
  for (std::size_t k = 0; k + 1 < e.steps.size(); ++k) {
    out.push_back({e.steps[k].observation, e.steps[k].action, e.steps[k].reward,
                   e.steps[k + 1].observation});
  }
  return out;
}

template <class Pred>
std::vector<StepRecord> truncate(const std::vector<StepRecord>& steps, Pred cond) {
  std::size_t n = steps.size();
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (cond(steps[i])) {
      n = i + 1;
      break;
    }
  }
  return {steps.begin(), steps.begin() + static_cast<std::ptrdiff_t>(n)};
}

inline EpisodeRecord concat_if_terminal(const EpisodeRecord& e, std::size_t copies) {
  EpisodeRecord out = e;
  if (!e.steps.empty() && e.steps.back().is_terminal) {
    for (std::size_t i = 0; i < copies; ++i) out.steps.push_back(e.steps.back());
  }
  return out;
}

template <class T>
Tensor with_bit(const Tensor& obs, bool absorbing) {
  std::vector<T> values;
  if constexpr (std::is_same_v<T, bool>) {
    auto raw = obs.values<std::uint8_t>();
    for (auto v : raw) values.push_back(!absorbing && v != 0);
  } else {
    auto raw = obs.values<T>();
    for (auto v : raw) values.push_back(absorbing ? T(0) : v);
  }
  values.push_back(absorbing ? T(1) : T(0));
  return Tensor::vector<T>(values);
}

inline Tensor observation_with_bit(const Tensor& obs, bool absorbing) {
  switch (obs.dtype()) {
    case DType::f32: return with_bit<float>(obs, absorbing);
    case DType::f64: return with_bit<double>(obs, absorbing);
    case DType::i32: return with_bit<std::int32_t>(obs, absorbing);
    case DType::i64: return with_bit<std::int64_t>(obs, absorbing);
    case DType::u8: return with_bit<std::uint8_t>(obs, absorbing);
    case DType::boolean: return with_bit<bool>(obs, absorbing);
    default: throw std::logic_error("not a numeric vector");
  }
}

inline EpisodeRecord absorbing(const EpisodeRecord& e) {
  EpisodeRecord out;
  out.metadata = e.metadata;
  const bool terminal = !e.steps.empty() && e.steps.back().is_terminal;
  const std::size_t n = e.steps.size() + (terminal ? 1 : 0);
  for (std::size_t i = 0; i < n; ++i) {
    StepRecord s = e.steps[std::min(i, e.steps.size() - 1)];
    const bool absorb = terminal && i + 2 >= n;
    s.observation = Nested(observation_with_bit(s.observation.leaf(), absorb));
    if (absorb) {
      s.action = s.action.map_leaves([](const Tensor& t) { return Tensor::zeros(t.dtype(), t.shape()); });
      s.is_last = false;
      s.is_terminal = false;
    }
    out.steps.push_back(std::move(s));
  }
  return out;
}

inline std::vector<StepRecord> pad(std::vector<StepRecord> steps, std::size_t count,
                                   StepRecord tmpl) {
  tmpl.is_first = tmpl.is_last = tmpl.is_terminal = false;
  for (std::size_t i = 0; i < count; ++i) steps.push_back(tmpl);
  return steps;
}

struct Stats {
  std::uint64_t count = 0;
  double mean = 0, std = 0, min = 0, max = 0;
};

// Correctly rounded sum via exact partials (Shewchuk).
inline double exact_sum(const std::vector<double>& xs) {
  std::vector<double> partials;
  for (double x : xs) {
    std::size_t i = 0;
    for (double y : partials) {
      if (std::abs(x) < std::abs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials[i++] = lo;
      x = hi;
    }
    partials.resize(i);
    partials.push_back(x);
  }
  long double total = 0;
  for (double p : partials) total += p;
  return static_cast<double>(total);
}

// Two-pass mean and population std; mean from an exact sum, squares
// accumulated in long double.
inline Stats statistics(const std::vector<double>& xs) {
  Stats s;
  s.count = xs.size();
  if (xs.empty()) return s;
  const long double mean =
      static_cast<long double>(exact_sum(xs)) / static_cast<long double>(xs.size());
  long double sq = 0;
  for (double x : xs) sq += (x - mean) * (x - mean);
  s.mean = static_cast<double>(mean);
  s.std = static_cast<double>(std::sqrt(sq / static_cast<long double>(xs.size())));
  s.min = *std::min_element(xs.begin(), xs.end());
  s.max = *std::max_element(xs.begin(), xs.end());
  return s;
}

// Windowed shuffle over a materialized vector, tracked by index.
template <class T>
std::vector<T> shuffle_take(const std::vector<T>& items, std::size_t buffer, std::uint64_t seed,
                            std::size_t k) {
  SplitMix64 rng(seed);
  std::vector<std::size_t> pool;
  std::size_t next = 0;
  while (pool.size() < buffer && next < items.size()) pool.push_back(next++);
  std::vector<T> out;
  while (!pool.empty() && out.size() < k) {
    const std::size_t j = rng.below(pool.size());
    out.push_back(items[pool[j]]);
    if (next < items.size()) {
      pool[j] = next++;
    } else {
      pool[j] = pool.back();
      pool.pop_back();
    }
  }
  return out;
}

}  // namespace epilogue::oracle
