#include "epilogue/env/grid_pick_place.hpp"

#include <algorithm>

namespace epilogue::env {

namespace {

Nested cell_tensor(const GridPickPlace::Cell& c) {
  return Nested(Tensor::vector(std::vector<std::int64_t>{c[0], c[1]}));
}

GridPickPlace::Cell read_cell(const Nested& obs, const char* name) {
  const Nested* node = obs.find(name);
  if (!node || !node->is_leaf()) fail(ErrorCode::invalid_argument, std::string("observation lacks ") + name);
  auto v = node->leaf().values<std::int64_t>();
  if (v.size() != 2) fail(ErrorCode::invalid_argument, std::string(name) + " must have two coordinates");
  return {v[0], v[1]};
}

}  // namespace

GridPickPlace::GridPickPlace(Config config, std::uint64_t seed) : config_(config), rng_(seed) {
  if (config_.time_limit < 1) fail(ErrorCode::invalid_argument, "time_limit must be positive");
  if (config_.cell_pixels < 1) fail(ErrorCode::invalid_argument, "cell_pixels must be positive");
}

FeatureSpec GridPickPlace::observation_spec() const {
  return FeatureSpec{{"agent", FeatureSpec(LeafSpec{DType::i64, {2}})},
                     {"bin", FeatureSpec(LeafSpec{DType::i64, {2}})},
                     {"can", FeatureSpec(LeafSpec{DType::i64, {2}})},
                     {"holding", scalar_spec(DType::boolean)}};
}

Nested GridPickPlace::observation() const {
  return Nested{{"agent", cell_tensor(state_.agent)},
                {"bin", cell_tensor(state_.bin)},
                {"can", cell_tensor(state_.can)},
                {"holding", Nested(Tensor::scalar(state_.holding))}};
}

GridPickPlace::State GridPickPlace::decode_observation(const Nested& observation) {
  State s;
  s.agent = read_cell(observation, "agent");
  s.can = read_cell(observation, "can");
  s.bin = read_cell(observation, "bin");
  const Nested* holding = observation.find("holding");
  if (!holding || !holding->is_leaf()) fail(ErrorCode::invalid_argument, "observation lacks holding");
  s.holding = holding->leaf().values<std::uint8_t>()[0] != 0;
  return s;
}

TimeStep GridPickPlace::reset() {
  std::array<std::int64_t, 3> cells{};
  for (std::size_t i = 0; i < cells.size(); ++i) {
    bool fresh = false;
    while (!fresh) {
      cells[i] = static_cast<std::int64_t>(rng_.below(kSize * kSize));
      fresh = std::find(cells.begin(), cells.begin() + static_cast<std::ptrdiff_t>(i), cells[i]) ==
              cells.begin() + static_cast<std::ptrdiff_t>(i);
    }
  }
  auto to_cell = [](std::int64_t index) { return Cell{index / kSize, index % kSize}; };
  state_ = State{to_cell(cells[0]), to_cell(cells[1]), to_cell(cells[2]), false};
  steps_ = 0;
  placed_ = false;
  needs_reset_ = false;
  return TimeStep{StepType::first, {}, {}, observation()};
}

TimeStep GridPickPlace::step(const Nested& action) {
  if (needs_reset_) return reset();
  if (!action.is_leaf() || action.leaf().dtype() != DType::i64 || action.leaf().rank() != 0) {
    fail(ErrorCode::invalid_argument, "GridPickPlace actions are i64 scalars");
  }
  auto a = action.leaf().values<std::int64_t>()[0];
  if (a < 0 || a > 5) fail(ErrorCode::invalid_argument, "action " + std::to_string(a) + " out of range");

  double reward = 0.0;
  auto& agent = state_.agent;
  switch (a) {
    case up: agent[0] = std::max<std::int64_t>(0, agent[0] - 1); break;
    case down: agent[0] = std::min<std::int64_t>(kSize - 1, agent[0] + 1); break;
    case left: agent[1] = std::max<std::int64_t>(0, agent[1] - 1); break;
    case right: agent[1] = std::min<std::int64_t>(kSize - 1, agent[1] + 1); break;
    case grab:
      if (!state_.holding && !placed_ && agent == state_.can) state_.holding = true;
      break;
    case drop:
      if (state_.holding) {
        state_.holding = false;
        state_.can = agent;
        if (state_.can == state_.bin) {
          reward = 1.0;
          placed_ = true;
        }
      }
      break;
    default: break;
  }
  if (state_.holding) state_.can = agent;
  ++steps_;

  TimeStep ts{StepType::mid, Nested(Tensor::scalar(reward)), Nested(Tensor::scalar(1.0)), observation()};
  if (placed_ && config_.terminate_on_success) {
    ts.step_type = StepType::last;
    ts.discount = Nested(Tensor::scalar(0.0));
  } else if (steps_ >= config_.time_limit) {
    ts.step_type = StepType::last;
  }
  if (ts.last()) needs_reset_ = true;
  return ts;
}

std::optional<LeafSpec> GridPickPlace::render_spec() const {
  const std::int64_t side = std::int64_t{kSize} * config_.cell_pixels;
  return LeafSpec{DType::u8, {side, side, 3}};
}

Tensor GridPickPlace::render() {
  const int cell = config_.cell_pixels;
  const int side = kSize * cell;
  std::vector<std::uint8_t> px(static_cast<std::size_t>(side) * side * 3, 224);
  auto fill = [&](const Cell& c, int inset, std::array<std::uint8_t, 3> rgb) {
    int r0 = static_cast<int>(c[0]) * cell + inset, c0 = static_cast<int>(c[1]) * cell + inset;
    for (int r = r0; r < r0 + cell - 2 * inset; ++r) {
      for (int col = c0; col < c0 + cell - 2 * inset; ++col) {
        auto* p = &px[(static_cast<std::size_t>(r) * side + col) * 3];
        p[0] = rgb[0];
        p[1] = rgb[1];
        p[2] = rgb[2];
      }
    }
  };
  for (int i = 0; i < side; ++i) {
    for (int j = 0; j < side; ++j) {
      if (i % cell == 0 || j % cell == 0) {
        auto* p = &px[(static_cast<std::size_t>(i) * side + j) * 3];
        p[0] = p[1] = p[2] = 176;
      }
    }
  }
  const int inset = std::max(1, cell / 10);
  fill(state_.bin, inset, {64, 168, 72});
  fill(state_.agent, inset, {48, 88, 200});
  fill(state_.can, std::max(inset + 1, cell / 4), {208, 48, 48});
  return Tensor::from_raw(DType::u8, {side, side, 3}, std::move(px));
}

}  // namespace epilogue::env
