#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "epilogue/core/step.hpp"

namespace epilogue {

enum class Rule {
  empty_episode,
  first_flag_missing,
  first_flag_misplaced,
  last_flag_missing,
  last_flag_misplaced,
  terminal_not_last,
  schema_mismatch,
  undefined_not_filled,
  episode_metadata_mismatch,
};

// e.g. "TERMINAL_NOT_LAST"
std::string_view rule_name(Rule rule);

struct Violation {
  Rule rule;
  std::optional<std::size_t> step;  // nullopt for episode-level rules
  std::string detail;

  bool operator==(const Violation&) const = default;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool has(Rule rule, std::optional<std::size_t> step) const;
  std::string to_string() const;
  bool operator==(const ValidationReport&) const = default;
};

/// Checks flag placement, is_terminal => is_last, schema conformance of every
/// per-step field, the canonical fill of undefined fields, and episode
/// metadata. Reports every violation found.
ValidationReport validate_episode(const EpisodeRecord& episode, const DatasetSchema& schema,
                                  Alignment alignment);

// Schema conformance of one step's six fields; first mismatch or nullopt.
std::optional<std::string> step_schema_error(const StepRecord& step, const DatasetSchema& schema);

}  // namespace epilogue
