#include "epilogue/env/recorder.hpp"

namespace epilogue::env {

namespace {

bool all_zero(const Nested& value) {
  bool zero = true;
  value.for_each_leaf([&](const std::string&, const Tensor& t) {
    if (t.dtype() == DType::bytes) {
      zero = false;
      return;
    }
    for (std::uint64_t i = 0; i < t.size(); ++i) {
      if (t.as_double(i) != 0.0) zero = false;
    }
  });
  return zero;
}

}  // namespace

RecordingEnvironment::RecordingEnvironment(Environment& env, EpisodeSink& sink,
                                           StepMetadataFn step_metadata,
                                           EpisodeMetadataFn episode_metadata)
    : env_(&env),
      sink_(&sink),
      step_metadata_(std::move(step_metadata)),
      episode_metadata_(std::move(episode_metadata)) {
  const auto& schema = sink.schema();
  auto check = [](const FeatureSpec& want, const FeatureSpec& have, const char* field) {
    if (want != have) {
      fail(ErrorCode::schema_mismatch, std::string("environment ") + field + " spec differs from the sink schema");
    }
  };
  check(schema.observation, env.observation_spec(), "observation");
  check(schema.action, env.action_spec(), "action");
  check(schema.reward, env.reward_spec(), "reward");
  check(schema.discount, env.discount_spec(), "discount");
}

void RecordingEnvironment::open_pending(const TimeStep& ts) {
  StepRecord s;
  s.observation = ts.observation;
  s.is_first = ts.first();
  s.metadata = step_metadata_ ? step_metadata_(ts, *env_)
                              : undefined_fill(sink_->schema().step_metadata);
  pending_ = std::move(s);
}

void RecordingEnvironment::commit_last(bool terminal) {
  const auto& schema = sink_->schema();
  StepRecord& s = *pending_;
  s.is_last = true;
  s.is_terminal = terminal;
  s.action = undefined_fill(schema.action);
  s.reward = undefined_fill(schema.reward);
  s.discount = undefined_fill(schema.discount);
  sink_->append_step(s);
  pending_.reset();
  ++total_steps_;
  sink_->end_episode(episode_metadata_ ? episode_metadata_(*env_)
                                       : undefined_fill(schema.episode_metadata));
  ++episodes_;
  episode_steps_ = 0;
}

void RecordingEnvironment::close_episode() {
  if (pending_) commit_last(false);
}

TimeStep RecordingEnvironment::reset() {
  close_episode();
  TimeStep ts = env_->reset();
  open_pending(ts);
  return ts;
}

TimeStep RecordingEnvironment::step(const Nested& action) {
  TimeStep ts = env_->step(action);
  if (ts.first()) {
    close_episode();
    open_pending(ts);
    return ts;
  }
  if (!pending_) fail(ErrorCode::invalid_episode, "environment stepped without a FIRST timestep");
  StepRecord& s = *pending_;
  s.action = action;
  s.reward = ts.reward;
  s.discount = ts.discount;
  sink_->append_step(s);
  ++episode_steps_;
  ++total_steps_;
  open_pending(ts);
  if (ts.last()) commit_last(all_zero(ts.discount));
  return ts;
}

RecordingEnvironment record(Environment& env, EpisodeSink& sink, StepMetadataFn step_metadata,
                            EpisodeMetadataFn episode_metadata) {
  return RecordingEnvironment(env, sink, std::move(step_metadata), std::move(episode_metadata));
}

}  // namespace epilogue::env
