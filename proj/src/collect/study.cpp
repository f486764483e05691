#include "epilogue/collect/study.hpp"

#include "epilogue/codec/digest.hpp"
#include "epilogue/env/grid_pick_place.hpp"

namespace epilogue::collect {

using nlohmann::json;

std::string_view study_state_name(StudyState state) {
  switch (state) {
    case StudyState::draft: return "draft";
    case StudyState::active: return "active";
    case StudyState::archived: return "archived";
  }
  return "?";
}

std::string_view step_mode_name(StepMode mode) { return mode == StepMode::sync ? "sync" : "async"; }

json study_to_json(const Study& s) {
  json envs = json::array();
  for (const auto& e : s.environments) envs.push_back({{"env", e.env}, {"config", e.config}});
  json doc{{"id", s.id},
           {"name", s.name},
           {"instructions", s.instructions},
           {"environments", envs},
           {"mode", step_mode_name(s.mode)},
           {"state", study_state_name(s.state)},
           {"pause_timeout_s", s.pause_timeout_s},
           {"noop_action", s.noop_action},
           {"input_map", s.input_map}};
  if (s.mode == StepMode::async) doc["frame_rate_hz"] = s.frame_rate_hz;
  return doc;
}

namespace {

template <class T>
T field_or(const json& doc, const char* key, T fallback) {
  auto it = doc.find(key);
  if (it == doc.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::invalid_argument, std::string("study field '") + key + "' has the wrong type");
  }
}

}  // namespace

Study study_from_json(const json& doc) {
  if (!doc.is_object()) fail(ErrorCode::invalid_argument, "study must be an object");
  Study s;
  s.id = field_or<std::string>(doc, "id", "");
  s.name = field_or<std::string>(doc, "name", "");
  s.instructions = field_or<std::string>(doc, "instructions", "");
  const std::string mode = field_or<std::string>(doc, "mode", "sync");
  if (mode == "sync") {
    s.mode = StepMode::sync;
  } else if (mode == "async") {
    s.mode = StepMode::async;
  } else {
    fail(ErrorCode::invalid_argument, "mode must be sync or async");
  }
  s.frame_rate_hz = field_or<std::uint32_t>(doc, "frame_rate_hz", 0);
  const std::string state = field_or<std::string>(doc, "state", "draft");
  if (state == "draft") {
    s.state = StudyState::draft;
  } else if (state == "active") {
    s.state = StudyState::active;
  } else if (state == "archived") {
    s.state = StudyState::archived;
  } else {
    fail(ErrorCode::invalid_argument, "unknown study state '" + state + "'");
  }
  s.pause_timeout_s = field_or<std::uint32_t>(doc, "pause_timeout_s", 120);
  if (doc.contains("noop_action")) s.noop_action = doc["noop_action"];
  if (doc.contains("input_map")) s.input_map = doc["input_map"];
  auto envs = doc.find("environments");
  if (envs != doc.end()) {
    if (!envs->is_array()) fail(ErrorCode::invalid_argument, "environments must be a list");
    for (const auto& e : *envs) {
      if (!e.is_object()) fail(ErrorCode::invalid_argument, "environment entries must be objects");
      EnvironmentConfig cfg;
      cfg.env = field_or<std::string>(e, "env", "");
      cfg.config = e.value("config", json::object());
      s.environments.push_back(std::move(cfg));
    }
  }
  return s;
}

std::unique_ptr<env::Environment> make_environment(const EnvironmentConfig& cfg, std::uint64_t seed) {
  if (!cfg.config.is_object()) fail(ErrorCode::invalid_argument, "environment config must be an object");
  if (cfg.env == "gridpickplace") {
    env::GridPickPlace::Config c;
    for (const auto& [key, value] : cfg.config.items()) {
      if (key == "time_limit" && value.is_number_integer()) {
        c.time_limit = value.get<std::int64_t>();
      } else if (key == "terminate_on_success" && value.is_boolean()) {
        c.terminate_on_success = value.get<bool>();
      } else if (key == "cell_pixels" && value.is_number_integer() && value.get<std::int64_t>() <= 64) {
        c.cell_pixels = value.get<int>();
      } else {
        fail(ErrorCode::invalid_argument, "bad gridpickplace option '" + key + "'");
      }
    }
    return std::make_unique<env::GridPickPlace>(c, seed);
  }
  fail(ErrorCode::invalid_argument, "unknown environment '" + cfg.env + "'");
}

void validate_study(const Study& s) {
  if (s.name.empty()) fail(ErrorCode::invalid_argument, "study needs a name");
  if (s.environments.empty()) fail(ErrorCode::invalid_argument, "study needs at least one environment");
  for (const auto& e : s.environments) make_environment(e, 0);
  if (s.mode == StepMode::async && (s.frame_rate_hz < 1 || s.frame_rate_hz > 60)) {
    fail(ErrorCode::invalid_argument, "frame_rate_hz must be in [1, 60]");
  }
  if (s.pause_timeout_s == 0) fail(ErrorCode::invalid_argument, "pause_timeout_s must be positive");
  if (!s.input_map.is_object()) fail(ErrorCode::invalid_argument, "input_map must be an object");
  for (const auto& e : s.environments) {
    auto env = make_environment(e, 0);
    nested_from_json(env->action_spec(), s.noop_action);
  }
}

namespace {

void collect_values(const json& value, std::size_t dim, const Shape& shape, std::vector<json>& out) {
  if (dim == shape.size()) {
    out.push_back(value);
    return;
  }
  if (!value.is_array() || static_cast<std::int64_t>(value.size()) != shape[dim]) {
    fail(ErrorCode::invalid_argument, "value does not match shape " + shape_string(shape));
  }
  for (const auto& v : value) collect_values(v, dim + 1, shape, out);
}

template <class T>
Tensor numeric_leaf(const Shape& shape, const std::vector<json>& values) {
  std::vector<T> data;
  for (const auto& v : values) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) fail(ErrorCode::invalid_argument, "expected a bool");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) fail(ErrorCode::invalid_argument, "expected a number");
    } else {
      if (!v.is_number_integer()) fail(ErrorCode::invalid_argument, "expected an integer");
    }
    data.push_back(v.get<T>());
  }
  return Tensor::from_values<T>(shape, data);
}

}  // namespace

Nested nested_from_json(const FeatureSpec& spec, const json& value) {
  if (!spec.is_leaf()) {
    if (!value.is_object()) fail(ErrorCode::invalid_argument, "expected an object");
    Nested out;
    for (const auto& e : spec.children()) {
      auto it = value.find(e.name);
      if (it == value.end()) fail(ErrorCode::invalid_argument, "missing field '" + e.name + "'");
      out.set(e.name, nested_from_json(e.value, *it));
    }
    if (value.size() != spec.children().size()) fail(ErrorCode::invalid_argument, "unexpected fields");
    return out;
  }
  const LeafSpec& leaf = spec.leaf();
  if (leaf.variable_first()) fail(ErrorCode::invalid_argument, "variable extents are not accepted here");
  std::vector<json> values;
  collect_values(value, 0, leaf.shape, values);
  switch (leaf.dtype) {
    case DType::f32: return Nested(numeric_leaf<float>(leaf.shape, values));
    case DType::f64: return Nested(numeric_leaf<double>(leaf.shape, values));
    case DType::i32: return Nested(numeric_leaf<std::int32_t>(leaf.shape, values));
    case DType::i64: return Nested(numeric_leaf<std::int64_t>(leaf.shape, values));
    case DType::u8: return Nested(numeric_leaf<std::uint8_t>(leaf.shape, values));
    case DType::boolean: return Nested(numeric_leaf<bool>(leaf.shape, values));
    case DType::bytes: {
      std::vector<std::string> strings;
      for (const auto& v : values) {
        if (!v.is_string()) fail(ErrorCode::invalid_argument, "expected a string");
        strings.push_back(v.get<std::string>());
      }
      return Nested(Tensor::from_strings(leaf.shape, std::move(strings)));
    }
  }
  fail(ErrorCode::invalid_argument, "unsupported dtype");
}

json tensor_to_json(const Tensor& t) {
  json values = json::array();
  if (t.dtype() == DType::bytes) {
    for (const auto& s : t.strings()) {
      values.push_back(codec::base64_encode({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()}));
    }
    return {{"dtype", dtype_name(t.dtype())}, {"shape", t.shape()}, {"values", values}};
  }
  for (std::size_t i = 0; i < t.size(); ++i) {
    switch (t.dtype()) {
      case DType::boolean: values.push_back(t.values<std::uint8_t>()[i] != 0); break;
      case DType::i32: values.push_back(t.values<std::int32_t>()[i]); break;
      case DType::i64: values.push_back(t.values<std::int64_t>()[i]); break;
      case DType::u8: values.push_back(t.values<std::uint8_t>()[i]); break;
      default: values.push_back(t.as_double(i));  // NaN and infinities serialize as null
    }
  }
  return {{"dtype", dtype_name(t.dtype())},
          {"shape", t.shape()},
          {"values", values},
          {"raw", codec::base64_encode(t.raw())}};
}

json nested_to_json(const Nested& tree) {
  if (tree.is_leaf()) return tensor_to_json(tree.leaf());
  json out = json::object();
  for (const auto& e : tree.children()) out[e.name] = nested_to_json(e.value);
  return out;
}

}  // namespace epilogue::collect
