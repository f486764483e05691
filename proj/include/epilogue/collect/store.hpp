#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <shared_mutex>
#include <variant>

#include "epilogue/collect/study.hpp"
#include "epilogue/core/step.hpp"

namespace epilogue::collect {

enum class Outcome { completed, canceled, abandoned, rejected };

std::string_view outcome_name(Outcome outcome);
std::optional<Outcome> parse_outcome(std::string_view name);

using TagValue = std::variant<bool, std::string>;

enum class TagScope { episode, step };

struct EpisodeInfo {
  std::string id;
  std::string study_id;
  std::string user_id;
  std::string session_id;
  Outcome outcome = Outcome::completed;
  std::size_t env_index = 0;
  std::uint64_t num_steps = 0;
  // False for rejected episodes, whose steps are discarded.
  bool persisted = false;
  // Reward profile: first reward element per step.
  std::vector<double> rewards;
  std::map<std::string, TagValue> episode_tags;
  std::map<std::string, std::set<std::uint64_t>> step_tags;

  bool operator==(const EpisodeInfo&) const = default;
};

nlohmann::json episode_info_to_json(const EpisodeInfo& info);
EpisodeInfo episode_info_from_json(const nlohmann::json& doc);

// Episode metadata every persisted episode carries, all bytes scalars.
FeatureSpec recorded_episode_metadata_spec();

struct ExportRequest {
  std::vector<Outcome> outcomes{Outcome::completed};
  // When non-empty, only these episodes (still filtered by outcome).
  std::vector<std::string> episode_ids;
  bool strip_images = false;
  std::optional<std::string> truncate_on_tag;
};

struct ExportSummary {
  std::uint64_t episodes = 0;
  std::uint64_t steps = 0;
  std::uint64_t bytes = 0;
};

/// Directory-backed studies and recorded episodes:
///
///   <root>/studies/<study>/study.json
///   <root>/studies/<study>/episodes/<episode>.rlds   one episode per file
///   <root>/studies/<study>/episodes/<episode>.json   outcome, tags, rewards
///
/// Readers share a lock; writers are exclusive.
class StudyStore {
 public:
  explicit StudyStore(std::filesystem::path root);

  // Validates and stores a draft; assigns the next id "study-NNNN".
  Study create_study(Study draft);
  // draft -> active; active stays active. Archived studies cannot be
  // reactivated (INVALID_ARGUMENT).
  Study activate_study(const std::string& id);
  Study archive_study(const std::string& id);
  std::vector<Study> studies() const;
  Study study(const std::string& id) const;  // UNKNOWN_STUDY

  // Fresh id "ep-NNNNNN", unique across studies.
  std::string next_episode_id();

  /// Records an episode that left a session. Unless the outcome is rejected
  /// the steps are written to the episode's own file, with episode metadata
  /// {episode_id, outcome, study_id, user_id}. INVALID_EPISODE if it does
  /// not validate.
  EpisodeInfo add_episode(EpisodeInfo info, const EpisodeRecord& episode, const DatasetSchema& schema);

  std::vector<EpisodeInfo> episodes(const std::string& study_id) const;
  EpisodeInfo episode(const std::string& episode_id) const;  // UNKNOWN_EPISODE
  EpisodeRecord load_episode(const std::string& episode_id) const;
  DatasetSchema episode_schema(const std::string& episode_id) const;
  // INDEX_OUT_OF_RANGE past the last step.
  StepRecord step(const std::string& episode_id, std::uint64_t index) const;

  /// Step tags are bool (false clears); episode tags bool or text.
  /// UNKNOWN_EPISODE, INDEX_OUT_OF_RANGE, INVALID_ARGUMENT.
  EpisodeInfo tag(const std::string& episode_id, TagScope scope, std::optional<std::uint64_t> step,
                  const std::string& name, const TagValue& value);

  /// Writes the selected episodes to one .rlds file. Step tags become step
  /// metadata "tag:<name>" (bool, false where unset) and episode tags
  /// episode metadata "tag:<name>" (bool, or text when any value is text).
  /// strip_images drops u8 [H, W, 3|4] step metadata leaves.
  /// truncate_on_tag cuts each episode after its first step carrying that
  /// tag; the cut step becomes a non-terminal last step.
  /// NO_MATCHING_EPISODES, SCHEMA_MISMATCH if episodes disagree.
  ExportSummary export_episodes(const std::string& study_id, const ExportRequest& request,
                                const std::filesystem::path& out) const;

  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path study_dir(const std::string& id) const;
  std::filesystem::path episode_path(const EpisodeInfo& info, const char* ext) const;
  const EpisodeInfo& find_episode(const std::string& id) const;
  void save_study(const Study& study) const;
  void save_info(const EpisodeInfo& info) const;

  std::filesystem::path root_;
  mutable std::shared_mutex mu_;
  std::map<std::string, Study> studies_;
  std::map<std::string, EpisodeInfo> episodes_;
  std::uint64_t next_study_ = 1;
  std::uint64_t next_episode_ = 1;
};

}  // namespace epilogue::collect
