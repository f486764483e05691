#pragma once

#include <memory>
#include <optional>

#include "epilogue/collect/clock.hpp"
#include "epilogue/collect/store.hpp"
#include "epilogue/env/recorder.hpp"

namespace epilogue::collect {

enum class Phase { idle, running, paused, awaiting_save, ended };

enum class EventKind {
  start_episode,
  action,
  pause,
  unpause,
  pause_timeout,
  cancel,
  episode_end,
  save,
  select_env,
  end_session,
};

std::string_view phase_name(Phase phase);
std::string_view event_name(EventKind kind);
std::optional<Phase> parse_phase(std::string_view name);

inline constexpr Phase kAllPhases[] = {Phase::idle, Phase::running, Phase::paused, Phase::awaiting_save,
                                       Phase::ended};
inline constexpr EventKind kAllEvents[] = {
    EventKind::start_episode, EventKind::action,      EventKind::pause, EventKind::unpause,
    EventKind::pause_timeout, EventKind::cancel,      EventKind::episode_end,
    EventKind::save,          EventKind::select_env,  EventKind::end_session};

struct Rule {
  Phase next;
  // Outcome assigned to the episode leaving the session, if any.
  std::optional<Outcome> outcome;
};

/// The legality table. nullopt means ILLEGAL_EVENT.
///
///   idle          start_episode -> running; select_env -> idle;
///                 end_session -> ended
///   running       action -> running; pause -> paused;
///                 cancel -> idle (canceled); episode_end -> awaiting_save;
///                 end_session -> ended (abandoned)
///   paused        unpause -> running; pause_timeout -> ended (abandoned);
///                 cancel -> idle (canceled); end_session -> ended (abandoned)
///   awaiting_save save(true) -> idle (completed);
///                 save(false) -> idle (rejected);
///                 end_session -> ended (abandoned)
///   ended         nothing
std::optional<Rule> transition_rule(Phase phase, EventKind kind, bool confirm = false);

struct Event {
  EventKind kind = EventKind::start_episode;
  nlohmann::json value;  // action value
  bool confirm = false;  // save
  std::size_t index = 0;  // select_env

  static Event of(EventKind kind) { return Event{kind, {}, false, 0}; }
  static Event action(nlohmann::json value) { return Event{EventKind::action, std::move(value), false, 0}; }
  static Event save(bool confirm) { return Event{EventKind::save, {}, confirm, 0}; }
  static Event select_env(std::size_t index) { return Event{EventKind::select_env, {}, false, index}; }
};

/// One user's interaction with a study. Owns its environment and processes
/// events one at a time; not thread-safe on its own.
///
/// Sync studies step the environment once per action event. Async studies
/// step on tick(): after T seconds of running time (pauses excluded) exactly
/// floor(T * frame_rate_hz) steps have been taken, each with the most recent
/// action, or the study's no-op before the first one. Every step is
/// recorded with its rendered frame as step metadata "image" and produces a
/// frame message. Messages returned are protocol documents.
class Session {
 public:
  Session(std::string id, std::string user_id, Study study, StudyStore& store, const Clock& clock,
          std::uint64_t seed = 0);
  ~Session();

  /// Throws ILLEGAL_EVENT (state unchanged) when the table forbids the event,
  /// INVALID_ARGUMENT for a malformed action and INDEX_OUT_OF_RANGE for a bad
  /// environment index. An environment failure ends the session and cancels
  /// the episode; the messages then include an error.
  std::vector<nlohmann::json> apply(const Event& event);

  // Async steps that are due, then the pause timeout.
  std::vector<nlohmann::json> tick();

  const std::string& id() const { return id_; }
  const std::string& user_id() const { return user_id_; }
  const Study& study() const { return study_; }
  Phase phase() const { return phase_; }
  std::optional<Clock::time_point> pause_deadline() const { return pause_deadline_; }
  std::size_t env_index() const { return env_index_; }
  // Environment steps taken in the current episode.
  std::uint64_t episode_steps() const { return steps_; }
  // Episode being played or awaiting save, else the last one to leave.
  const std::string& episode_id() const { return episode_id_; }
  std::optional<Outcome> last_outcome() const { return last_outcome_; }
  DatasetSchema schema() const;

  nlohmann::json state_message() const;

 private:
  struct Runtime;

  void build_environment(std::size_t index);
  void begin_episode(std::vector<nlohmann::json>& out);
  void step_environment(const Nested& action, std::vector<nlohmann::json>& out);
  void close_episode(Outcome outcome);
  Clock::duration running_time() const;
  nlohmann::json frame_message(double reward) const;

  std::string id_;
  std::string user_id_;
  Study study_;
  StudyStore* store_;
  const Clock* clock_;
  std::uint64_t seed_;
  std::unique_ptr<Runtime> rt_;

  Phase phase_ = Phase::idle;
  std::size_t env_index_ = 0;
  std::string episode_id_;
  std::optional<Outcome> last_outcome_;
  std::optional<Clock::time_point> pause_deadline_;
  std::uint64_t steps_ = 0;
  std::uint64_t episodes_started_ = 0;
  Nested latest_action_;
  Clock::time_point running_since_{};
  Clock::duration running_before_{};
};

}  // namespace epilogue::collect
