#include "epilogue/env/agents.hpp"

#include <cmath>

namespace epilogue::env {

namespace {

std::int64_t step_toward(const GridPickPlace::Cell& from, const GridPickPlace::Cell& to) {
  if (from[0] < to[0]) return GridPickPlace::down;
  if (from[0] > to[0]) return GridPickPlace::up;
  if (from[1] < to[1]) return GridPickPlace::right;
  return GridPickPlace::left;
}

Nested action_tensor(std::int64_t a) { return Nested(Tensor::scalar(a)); }

}  // namespace

std::int64_t planner_action(const GridPickPlace::State& s) {
  if (!s.holding) {
    if (s.agent != s.can) return step_toward(s.agent, s.can);
    // can already sits on the bin: nothing left to do
    if (s.can == s.bin) return GridPickPlace::drop;
    return GridPickPlace::grab;
  }
  if (s.agent != s.bin) return step_toward(s.agent, s.bin);
  return GridPickPlace::drop;
}

Policy planner_policy(double epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    fail(ErrorCode::invalid_argument, "epsilon must lie in [0, 1]");
  }
  return [epsilon](const Nested& observation, Rng& rng) {
    if (rng.uniform01() < epsilon) return action_tensor(static_cast<std::int64_t>(rng.below(6)));
    return action_tensor(planner_action(GridPickPlace::decode_observation(observation)));
  };
}

Policy uniform_random_policy(std::int64_t num_actions) {
  if (num_actions < 1) fail(ErrorCode::invalid_argument, "uniform policy needs at least one action");
  return [num_actions](const Nested&, Rng& rng) {
    return action_tensor(static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(num_actions))));
  };
}

}  // namespace epilogue::env
