#pragma once

#include <array>

#include "epilogue/core/random.hpp"
#include "epilogue/env/environment.hpp"

namespace epilogue::env {

/// 8x8 grid: carry the can onto the bin. Actions (i64 scalar):
/// 0 up, 1 down, 2 left, 3 right, 4 grab, 5 drop. Observation
/// {agent, can, bin: i64[2] (row, col), holding: bool}. Dropping the can on
/// the bin pays +1 once; afterwards the can stays in the bin.
class GridPickPlace final : public Environment {
 public:
  struct Config {
    std::int64_t time_limit = 400;
    // When false the episode runs to the time limit after success.
    bool terminate_on_success = true;
    int cell_pixels = 20;
  };

  enum Action : std::int64_t { up = 0, down = 1, left = 2, right = 3, grab = 4, drop = 5 };
  static constexpr int kSize = 8;
  using Cell = std::array<std::int64_t, 2>;

  GridPickPlace() : GridPickPlace(Config{}) {}
  explicit GridPickPlace(Config config, std::uint64_t seed = 0);

  FeatureSpec observation_spec() const override;
  FeatureSpec action_spec() const override { return scalar_spec(DType::i64); }
  TimeStep reset() override;
  TimeStep step(const Nested& action) override;
  Tensor render() override;
  std::optional<LeafSpec> render_spec() const override;
  void seed(std::uint64_t seed) override { rng_.seed(seed); }
  std::int64_t num_actions() const override { return 6; }

  const Config& config() const { return config_; }
  std::int64_t steps_taken() const { return steps_; }
  bool placed() const { return placed_; }

  // Reads a GridPickPlace observation back into cells.
  struct State {
    Cell agent{}, can{}, bin{};
    bool holding = false;
  };
  static State decode_observation(const Nested& observation);

 private:
  Nested observation() const;

  Config config_;
  Rng rng_;
  State state_;
  std::int64_t steps_ = 0;
  bool placed_ = false;
  bool needs_reset_ = true;
};

}  // namespace epilogue::env
