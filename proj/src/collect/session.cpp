#include "epilogue/collect/session.hpp"

#include "epilogue/codec/digest.hpp"
#include "epilogue/collect/image.hpp"
#include "epilogue/core/random.hpp"
#include "epilogue/env/metadata.hpp"

namespace epilogue::collect {
using nlohmann::json;

std::string_view phase_name(Phase phase) {
  switch (phase) {
    case Phase::idle: return "idle";
    case Phase::running: return "running";
    case Phase::paused: return "paused";
    case Phase::awaiting_save: return "awaiting_save";
    case Phase::ended: return "ended";
  }
  return "?";
}

std::string_view event_name(EventKind kind) {
  switch (kind) {
    case EventKind::start_episode: return "start_episode";
    case EventKind::action: return "action";
    case EventKind::pause: return "pause";
    case EventKind::unpause: return "unpause";
    case EventKind::pause_timeout: return "pause_timeout";
    case EventKind::cancel: return "cancel";
    case EventKind::episode_end: return "episode_end";
    case EventKind::save: return "save";
    case EventKind::select_env: return "select_env";
    case EventKind::end_session: return "end_session";
  }
  return "?";
}

std::optional<Phase> parse_phase(std::string_view name) {
  for (Phase p : kAllPhases) {
    if (phase_name(p) == name) return p;
  }
  return std::nullopt;
}

std::optional<Rule> transition_rule(Phase phase, EventKind kind, bool confirm) {
  using K = EventKind;
  switch (phase) {
    case Phase::idle:
      if (kind == K::start_episode) return Rule{Phase::running, {}};
      if (kind == K::select_env) return Rule{Phase::idle, {}};
      if (kind == K::end_session) return Rule{Phase::ended, {}};
      break;
    case Phase::running:
      if (kind == K::action) return Rule{Phase::running, {}};
      if (kind == K::pause) return Rule{Phase::paused, {}};
      if (kind == K::cancel) return Rule{Phase::idle, Outcome::canceled};
      if (kind == K::episode_end) return Rule{Phase::awaiting_save, {}};
      if (kind == K::end_session) return Rule{Phase::ended, Outcome::abandoned};
      break;
    case Phase::paused:
      if (kind == K::unpause) return Rule{Phase::running, {}};
      if (kind == K::pause_timeout) return Rule{Phase::ended, Outcome::abandoned};
      if (kind == K::cancel) return Rule{Phase::idle, Outcome::canceled};
      if (kind == K::end_session) return Rule{Phase::ended, Outcome::abandoned};
      break;
    case Phase::awaiting_save:
      if (kind == K::save) return Rule{Phase::idle, confirm ? Outcome::completed : Outcome::rejected};
      if (kind == K::end_session) return Rule{Phase::ended, Outcome::abandoned};
      break;
    case Phase::ended:
      break;
  }
  return std::nullopt;
}

struct Session::Runtime {
  std::unique_ptr<env::Environment> env;
  std::unique_ptr<EpisodeBuffer> buffer;
  std::unique_ptr<env::RecordingEnvironment> recorder;
  DatasetSchema schema;
  Tensor frame;
  Nested observation;
};

namespace {

json error_message(std::string_view code, const std::string& message) {
  return json{{"v", 1}, {"type", "error"}, {"code", code}, {"message", message}};
}

}  // namespace

Session::Session(std::string id, std::string user_id, Study study, StudyStore& store, const Clock& clock,
                 std::uint64_t seed)
    : id_(std::move(id)),
      user_id_(std::move(user_id)),
      study_(std::move(study)),
      store_(&store),
      clock_(&clock),
      seed_(seed) {
  if (study_.state != StudyState::active) {
    fail(ErrorCode::study_not_active, "study '" + study_.id + "' is " + std::string(study_state_name(study_.state)));
  }
  build_environment(0);
}

Session::~Session() = default;

DatasetSchema Session::schema() const { return rt_->schema; }

void Session::build_environment(std::size_t index) {
  if (index >= study_.environments.size()) {
    fail(ErrorCode::index_out_of_range, "environment " + std::to_string(index) + " of " +
                                            std::to_string(study_.environments.size()));
  }
  auto rt = std::make_unique<Runtime>();
  rt->env = make_environment(study_.environments[index], seed_);
  rt->schema = env::schema_for(*rt->env, env::render_metadata_spec(*rt->env), recorded_episode_metadata_spec());
  rt->buffer = std::make_unique<EpisodeBuffer>(rt->schema);
  Runtime* raw = rt.get();
  rt->recorder = std::make_unique<env::RecordingEnvironment>(
      *rt->env, *rt->buffer, [raw](const env::TimeStep&, env::Environment& e) {
        raw->frame = e.render();
        return Nested{{"image", Nested(raw->frame)}};
      });
  rt_ = std::move(rt);
  env_index_ = index;
}

Clock::duration Session::running_time() const {
  if (phase_ != Phase::running) return running_before_;
  return running_before_ + (clock_->now() - running_since_);
}

json Session::frame_message(double reward) const {
  const auto& shape = rt_->frame.shape();
  return json{{"v", 1},
              {"type", "frame"},
              {"session", id_},
              {"episode", episode_id_},
              {"step", steps_},
              {"reward", reward},
              {"observation", nested_to_json(rt_->observation)},
              {"width", shape.size() == 3 ? shape[1] : 0},
              {"height", shape.size() == 3 ? shape[0] : 0},
              {"image", codec::base64_encode(encode_png(rt_->frame))}};
}

json Session::state_message() const {
  json doc{{"v", 1},
           {"type", "state"},
           {"session", id_},
           {"study", study_.id},
           {"phase", phase_name(phase_)},
           {"env_index", env_index_},
           {"steps", steps_},
           {"episode", episode_id_.empty() ? json(nullptr) : json(episode_id_)}};
  if (last_outcome_) doc["outcome"] = outcome_name(*last_outcome_);
  if (pause_deadline_) {
    const auto left = *pause_deadline_ - clock_->now();
    doc["pause_remaining_ms"] = std::max<std::int64_t>(0, std::chrono::duration_cast<std::chrono::milliseconds>(left).count());
  }
  return doc;
}

void Session::begin_episode(std::vector<json>& out) {
  episode_id_ = store_->next_episode_id();
  steps_ = 0;
  last_outcome_.reset();
  latest_action_ = nested_from_json(rt_->env->action_spec(), study_.noop_action);
  SplitMix64 mix(seed_ ^ (episodes_started_++ * 0x9e3779b97f4a7c15ULL));
  rt_->recorder->seed(mix.next());
  env::TimeStep ts = rt_->recorder->reset();
  rt_->observation = ts.observation;
  running_before_ = Clock::duration::zero();
  running_since_ = clock_->now();
  out.push_back(frame_message(0.0));
}

void Session::step_environment(const Nested& action, std::vector<json>& out) {
  env::TimeStep ts = rt_->recorder->step(action);
  ++steps_;
  rt_->observation = ts.observation;
  const double reward = ts.reward.is_leaf() && ts.reward.leaf().size() > 0 ? ts.reward.leaf().as_double(0) : 0.0;
  out.push_back(frame_message(reward));
  if (ts.last()) {
    running_before_ = running_time();
    phase_ = Phase::awaiting_save;
    out.push_back(json{{"v", 1}, {"type", "episode_end"}, {"session", id_}, {"episode", episode_id_},
                       {"steps", steps_}, {"terminal", ts.discount.is_leaf() && ts.discount.leaf().as_double(0) == 0}});
  }
}

void Session::close_episode(Outcome outcome) {
  if (rt_->recorder->episode_open()) rt_->recorder->close_episode();
  auto& episodes = rt_->buffer->episodes();
  if (episodes.empty()) return;
  EpisodeRecord episode = std::move(episodes.back());
  rt_->buffer->clear();
  episode.metadata = Nested{{"episode_id", Nested(Tensor::string(episode_id_))},
                            {"outcome", Nested(Tensor::string(std::string(outcome_name(outcome))))},
                            {"study_id", Nested(Tensor::string(study_.id))},
                            {"user_id", Nested(Tensor::string(user_id_))}};
  EpisodeInfo info;
  info.id = episode_id_;
  info.study_id = study_.id;
  info.user_id = user_id_;
  info.session_id = id_;
  info.outcome = outcome;
  info.env_index = env_index_;
  store_->add_episode(std::move(info), episode, rt_->schema);
  last_outcome_ = outcome;
}

std::vector<json> Session::apply(const Event& event) {
  auto rule = transition_rule(phase_, event.kind, event.confirm);
  if (!rule) {
    fail(ErrorCode::illegal_event,
         std::string(event_name(event.kind)) + " is not allowed while " + std::string(phase_name(phase_)));
  }
  Nested action;
  if (event.kind == EventKind::action) action = nested_from_json(rt_->env->action_spec(), event.value);
  if (event.kind == EventKind::select_env && event.index >= study_.environments.size()) {
    fail(ErrorCode::index_out_of_range, "environment " + std::to_string(event.index) + " of " +
                                            std::to_string(study_.environments.size()));
  }

  std::vector<json> out;
  try {
    switch (event.kind) {
      case EventKind::start_episode:
        begin_episode(out);
        phase_ = Phase::running;
        break;
      case EventKind::action:
        if (study_.mode == StepMode::sync) {
          step_environment(action, out);
        } else {
          latest_action_ = std::move(action);
        }
        break;
      case EventKind::pause:
        running_before_ = running_time();
        phase_ = Phase::paused;
        pause_deadline_ = clock_->now() + std::chrono::seconds(study_.pause_timeout_s);
        break;
      case EventKind::unpause:
        phase_ = Phase::running;
        running_since_ = clock_->now();
        pause_deadline_.reset();
        break;
      case EventKind::episode_end:
        if (rt_->recorder->episode_open()) rt_->recorder->close_episode();
        running_before_ = running_time();
        phase_ = Phase::awaiting_save;
        out.push_back(json{{"v", 1}, {"type", "episode_end"}, {"session", id_}, {"episode", episode_id_},
                           {"steps", steps_}, {"terminal", false}});
        break;
      case EventKind::select_env:
        build_environment(event.index);
        break;
      case EventKind::pause_timeout:
      case EventKind::cancel:
      case EventKind::save:
      case EventKind::end_session:
        if (rule->outcome) close_episode(*rule->outcome);
        phase_ = rule->next;
        pause_deadline_.reset();
        break;
    }
  } catch (const std::exception& e) {
    // The environment (or the store) failed mid-episode: keep what was
    // recorded as canceled and end the session.
    std::string detail = e.what();
    try {
      if (phase_ == Phase::running || phase_ == Phase::paused) close_episode(Outcome::canceled);
    } catch (const std::exception&) {
    }
    phase_ = Phase::ended;
    pause_deadline_.reset();
    const Error* err = dynamic_cast<const Error*>(&e);
    out.push_back(error_message(err ? error_code_name(err->code()) : "ENVIRONMENT_FAILURE", detail));
  }
  out.push_back(state_message());
  return out;
}

std::vector<json> Session::tick() {
  std::vector<json> out;
  if (phase_ == Phase::running && study_.mode == StepMode::async) {
    const auto ns = static_cast<std::uint64_t>(running_time().count());
    const std::uint64_t hz = study_.frame_rate_hz;
    // floor(T * hz) without going through floating point.
    const std::uint64_t due = (ns / 1'000'000'000ULL) * hz + (ns % 1'000'000'000ULL) * hz / 1'000'000'000ULL;
    try {
      while (phase_ == Phase::running && steps_ < due) step_environment(latest_action_, out);
    } catch (const std::exception& e) {
      std::string detail = e.what();
      try {
        close_episode(Outcome::canceled);
      } catch (const std::exception&) {
      }
      phase_ = Phase::ended;
      const Error* err = dynamic_cast<const Error*>(&e);
      out.push_back(error_message(err ? error_code_name(err->code()) : "ENVIRONMENT_FAILURE", detail));
    }
    if (phase_ != Phase::running) out.push_back(state_message());
  }
  if (phase_ == Phase::paused && pause_deadline_ && clock_->now() >= *pause_deadline_) {
    auto more = apply(Event::of(EventKind::pause_timeout));
    out.insert(out.end(), more.begin(), more.end());
  }
  return out;
}

}  // namespace epilogue::collect
