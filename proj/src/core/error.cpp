#include "epilogue/core/error.hpp"

namespace epilogue {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "INVALID_ARGUMENT";
    case ErrorCode::invalid_schema: return "INVALID_SCHEMA";
    case ErrorCode::schema_mismatch: return "SCHEMA_MISMATCH";
    case ErrorCode::unresolved_variable_extent: return "UNRESOLVED_VARIABLE_EXTENT";
    case ErrorCode::io_failure: return "IO_FAILURE";
    case ErrorCode::flag_sequence_violation: return "FLAG_SEQUENCE_VIOLATION";
    case ErrorCode::dangling_episode: return "DANGLING_EPISODE";
    case ErrorCode::writer_closed: return "WRITER_CLOSED";
    case ErrorCode::bad_magic: return "BAD_MAGIC";
    case ErrorCode::unsupported_version: return "UNSUPPORTED_VERSION";
    case ErrorCode::chunk_corrupt: return "CHUNK_CORRUPT";
    case ErrorCode::missing_footer: return "MISSING_FOOTER";
    case ErrorCode::corrupt_record: return "CORRUPT_RECORD";
    case ErrorCode::episode_out_of_range: return "EPISODE_OUT_OF_RANGE";
    case ErrorCode::step_out_of_range: return "STEP_OUT_OF_RANGE";
    case ErrorCode::invalid_episode: return "INVALID_EPISODE";
    case ErrorCode::non_vector_observation: return "NON_VECTOR_OBSERVATION";
    case ErrorCode::unsupported_dtype: return "UNSUPPORTED_DTYPE";
    case ErrorCode::unknown_field: return "UNKNOWN_FIELD";
    case ErrorCode::duplicate_version: return "DUPLICATE_VERSION";
    case ErrorCode::checksum_mismatch: return "CHECKSUM_MISMATCH";
    case ErrorCode::schema_digest_mismatch: return "SCHEMA_DIGEST_MISMATCH";
    case ErrorCode::unknown_dataset: return "UNKNOWN_DATASET";
    case ErrorCode::unknown_split: return "UNKNOWN_SPLIT";
    case ErrorCode::bad_split_expr: return "BAD_SPLIT_EXPR";
    case ErrorCode::network_failure: return "NETWORK_FAILURE";
    case ErrorCode::pipeline_kind_mismatch: return "PIPELINE_KIND_MISMATCH";
    case ErrorCode::illegal_event: return "ILLEGAL_EVENT";
    case ErrorCode::unknown_study: return "UNKNOWN_STUDY";
    case ErrorCode::unknown_episode: return "UNKNOWN_EPISODE";
    case ErrorCode::index_out_of_range: return "INDEX_OUT_OF_RANGE";
    case ErrorCode::no_matching_episodes: return "NO_MATCHING_EPISODES";
    case ErrorCode::study_not_active: return "STUDY_NOT_ACTIVE";
    case ErrorCode::unknown_session: return "UNKNOWN_SESSION";
  }
  return "UNKNOWN";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
      code_(code),
      detail_(message) {}

void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace epilogue
