#include "epilogue/core/validate.hpp"

#include <sstream>

namespace epilogue {

std::string_view rule_name(Rule rule) {
  switch (rule) {
    case Rule::empty_episode: return "EMPTY_EPISODE";
    case Rule::first_flag_missing: return "FIRST_FLAG_MISSING";
    case Rule::first_flag_misplaced: return "FIRST_FLAG_MISPLACED";
    case Rule::last_flag_missing: return "LAST_FLAG_MISSING";
    case Rule::last_flag_misplaced: return "LAST_FLAG_MISPLACED";
    case Rule::terminal_not_last: return "TERMINAL_NOT_LAST";
    case Rule::schema_mismatch: return "SCHEMA_MISMATCH";
    case Rule::undefined_not_filled: return "UNDEFINED_NOT_FILLED";
    case Rule::episode_metadata_mismatch: return "EPISODE_METADATA_MISMATCH";
  }
  return "?";
}

bool ValidationReport::has(Rule rule, std::optional<std::size_t> step) const {
  for (const auto& v : violations) {
    if (v.rule == rule && v.step == step) return true;
  }
  return false;
}

std::string ValidationReport::to_string() const {
  if (ok()) return "ok";
  std::ostringstream out;
  for (const auto& v : violations) {
    out << rule_name(v.rule);
    if (v.step) out << '@' << *v.step;
    if (!v.detail.empty()) out << " (" << v.detail << ')';
    out << '\n';
  }
  return out.str();
}

std::optional<std::string> step_schema_error(const StepRecord& step, const DatasetSchema& schema) {
  struct Field {
    const char* name;
    const Nested& value;
    const FeatureSpec& spec;
  };
  const Field fields[] = {{"observation", step.observation, schema.observation},
                          {"action", step.action, schema.action},
                          {"reward", step.reward, schema.reward},
                          {"discount", step.discount, schema.discount},
                          {"metadata", step.metadata, schema.step_metadata}};
  for (const auto& f : fields) {
    if (auto err = conformance_error(f.value, f.spec)) return std::string(f.name) + ": " + *err;
  }
  return std::nullopt;
}

ValidationReport validate_episode(const EpisodeRecord& episode, const DatasetSchema& schema,
                                  Alignment alignment) {
  ValidationReport report;
  auto add = [&](Rule rule, std::optional<std::size_t> step, std::string detail = {}) {
    report.violations.push_back(Violation{rule, step, std::move(detail)});
  };

  if (auto err = conformance_error(episode.metadata, schema.episode_metadata)) {
    add(Rule::episode_metadata_mismatch, std::nullopt, *err);
  }
  const auto& steps = episode.steps;
  if (steps.empty()) {
    add(Rule::empty_episode, std::nullopt);
    return report;
  }
  const std::size_t last = steps.size() - 1;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const StepRecord& s = steps[i];
    if (i == 0 && !s.is_first) add(Rule::first_flag_missing, i);
    if (i != 0 && s.is_first) add(Rule::first_flag_misplaced, i);
    if (i == last && !s.is_last) add(Rule::last_flag_missing, i);
    if (i != last && s.is_last) add(Rule::last_flag_misplaced, i);
    if (s.is_terminal && !s.is_last) add(Rule::terminal_not_last, i);

    auto schema_err = step_schema_error(s, schema);
    if (schema_err) {
      add(Rule::schema_mismatch, i, *schema_err);
      continue;
    }
    auto defined = defined_fields(s, alignment);
    auto check_fill = [&](bool is_defined, const Nested& value, const FeatureSpec& spec,
                          const char* name) {
      if (!is_defined && value != undefined_fill(spec)) {
        add(Rule::undefined_not_filled, i, std::string(name) + " is undefined but not zero-filled");
      }
    };
    check_fill(defined.action, s.action, schema.action, "action");
    check_fill(defined.reward, s.reward, schema.reward, "reward");
    check_fill(defined.discount, s.discount, schema.discount, "discount");
  }
  return report;
}

}  // namespace epilogue
