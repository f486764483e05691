#pragma once

#include <functional>

#include "epilogue/core/random.hpp"
#include "epilogue/env/grid_pick_place.hpp"

namespace epilogue::env {

using Policy = std::function<Nested(const Nested& observation, Rng& rng)>;

// Shortest-path action for GridPickPlace: walk to the can (rows first), grab,
// walk to the bin, drop.
std::int64_t planner_action(const GridPickPlace::State& state);

/// Planner with probability 1 - epsilon, uniform over the six actions
/// otherwise. INVALID_ARGUMENT unless 0 <= epsilon <= 1.
Policy planner_policy(double epsilon);

Policy uniform_random_policy(std::int64_t num_actions);

}  // namespace epilogue::env
