#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "epilogue/core/step.hpp"

namespace epilogue::cli {

enum class StreamKind { episode, step, transition, window };

std::string_view stream_kind_name(StreamKind kind);

/// Where a pipeline reads from: an .rlds file, or a catalog dataset split.
struct PipelineInput {
  std::filesystem::path path;
  std::filesystem::path catalog;  // catalog store directory
  std::string dataset;            // name or name@version
  std::string split;              // e.g. "train[0:10]"
};

struct PipelineStage {
  std::string op;
  nlohmann::json params = nlohmann::json::object();
};

/// Exactly one of path or report. Reports: "count", "stats" (field),
/// "histogram" (field or "return", bins, optional range).
struct PipelineOutput {
  std::filesystem::path path;
  std::string report;
  std::string field;
  std::size_t bins = 20;
  std::optional<std::pair<double, double>> range;
};

/// A pipeline document:
///
///   {"v": 1,
///    "input":  {"path": "in.rlds"}
///              | {"catalog": "store", "dataset": "name@1.0.0", "split": "train[0:10]"},
///    "stages": [{"op": "sample_episodes", "buffer": 30, "seed": 42, "k": 5}, ...],
///    "output": {"path": "out.rlds"} | {"report": "histogram", "field": "return"}}
///
/// Stage ops and kinds (input -> output):
///   take {n}                                 episode -> episode
///   sample_episodes {buffer, seed, k}        episode -> episode
///   shift_alignment {to}                     episode -> episode
///   to_absorbing                             episode -> episode
///   flatten_observation {paths}              episode -> episode
///   truncate_after_condition {field}         episode -> episode
///   concat_if_terminal {copies}              episode -> episode
///   pad_steps {count}                        episode -> episode
///   flatten                                  episode -> step
///   make_transitions                         step -> transition
///   batch_steps {size, shift, drop_remainder} step -> window
///
/// truncate_after_condition stops each episode after the first step whose
/// selected leaf has a non-zero first element. Relative paths resolve
/// against `base_dir`.
struct PipelineSpec {
  PipelineInput input;
  std::vector<PipelineStage> stages;
  PipelineOutput output;
};

// INVALID_ARGUMENT for malformed documents or unknown ops.
PipelineSpec parse_pipeline_spec(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});

/// Kind of each stage's output, checked before anything runs. Throws
/// PIPELINE_KIND_MISMATCH naming the first stage (0-based; the output sink
/// counts as stage stages.size()) whose input kind is wrong.
std::vector<StreamKind> check_pipeline(const PipelineSpec& spec);

// Index carried by PIPELINE_KIND_MISMATCH errors.
struct KindMismatch {
  std::size_t stage = 0;
  StreamKind expected = StreamKind::episode;
  StreamKind actual = StreamKind::episode;
};
std::optional<KindMismatch> find_kind_mismatch(const PipelineSpec& spec);

/// Runs the pipeline, streaming stage to stage. Returns the report document
/// ({"v":1, "report": ..., ...}); for file outputs it summarises what was
/// written. `cache_dir` is used for catalog inputs.
nlohmann::json run_pipeline(const PipelineSpec& spec, const std::filesystem::path& cache_dir);

}  // namespace epilogue::cli
