#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "epilogue/env/environment.hpp"

namespace epilogue::collect {

enum class StudyState { draft, active, archived };
enum class StepMode { sync, async };

std::string_view study_state_name(StudyState state);
std::string_view step_mode_name(StepMode mode);

/// An environment offered by a study. `config` holds the environment's
/// options, including its termination conditions; for "gridpickplace":
/// time_limit, terminate_on_success, cell_pixels.
struct EnvironmentConfig {
  std::string env;
  nlohmann::json config = nlohmann::json::object();
  bool operator==(const EnvironmentConfig&) const = default;
};

struct Study {
  std::string id;
  std::string name;
  std::string instructions;
  std::vector<EnvironmentConfig> environments;
  StepMode mode = StepMode::sync;
  std::uint32_t frame_rate_hz = 0;  // async only, 1..60
  StudyState state = StudyState::draft;
  std::uint32_t pause_timeout_s = 120;
  // Action sent on async ticks before the user has chosen one.
  nlohmann::json noop_action = 5;
  // Keyboard key -> action value, for clients.
  nlohmann::json input_map = nlohmann::json::object();

  bool operator==(const Study&) const = default;
};

nlohmann::json study_to_json(const Study& study);
// INVALID_ARGUMENT on malformed documents; missing optional fields default.
Study study_from_json(const nlohmann::json& doc);

/// INVALID_ARGUMENT unless the study has a name, at least one known
/// environment with a valid config, frame_rate_hz in [1, 60] for async mode,
/// and a positive pause timeout.
void validate_study(const Study& study);

/// Builds the environment for a config; INVALID_ARGUMENT for unknown names
/// or bad options.
std::unique_ptr<env::Environment> make_environment(const EnvironmentConfig& config, std::uint64_t seed);

/// Converts a JSON value into a tensor tree matching `spec`: numbers for
/// scalar leaves, (nested) arrays for fixed-shape leaves, objects for inner
/// nodes. INVALID_ARGUMENT on mismatch.
Nested nested_from_json(const FeatureSpec& spec, const nlohmann::json& value);

/// Tensor as {"dtype", "shape", "values", "raw"}: values is the flat
/// row-major list (bool as true/false, bytes base64), raw the base64 of the
/// exact little-endian bytes for numeric dtypes. Trees become objects.
nlohmann::json tensor_to_json(const Tensor& tensor);
nlohmann::json nested_to_json(const Nested& tree);

}  // namespace epilogue::collect
