#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace epilogue {

enum class ErrorCode {
  invalid_argument,
  invalid_schema,
  schema_mismatch,
  unresolved_variable_extent,
  io_failure,
  flag_sequence_violation,
  dangling_episode,
  writer_closed,
  bad_magic,
  unsupported_version,
  chunk_corrupt,
  missing_footer,
  corrupt_record,
  episode_out_of_range,
  step_out_of_range,
  invalid_episode,
  non_vector_observation,
  unsupported_dtype,
  unknown_field,
  duplicate_version,
  checksum_mismatch,
  schema_digest_mismatch,
  unknown_dataset,
  unknown_split,
  bad_split_expr,
  network_failure,
  pipeline_kind_mismatch,
  illegal_event,
  unknown_study,
  unknown_episode,
  index_out_of_range,
  no_matching_episodes,
  study_not_active,
  unknown_session,
};

// Upper-case identifier used in reports and on the wire, e.g. "CHUNK_CORRUPT".
std::string_view error_code_name(ErrorCode code);

/// Position of a step inside a dataset, attached to errors raised by
/// per-step callbacks.
struct StepCoordinates {
  std::uint64_t episode = 0;
  std::uint64_t step = 0;
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

  // Byte offset of the offending chunk for CHUNK_CORRUPT.
  std::optional<std::uint64_t> offset;
  std::optional<StepCoordinates> coordinates;

 private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace epilogue
