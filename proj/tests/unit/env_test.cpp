#include <doctest.h>

#include <deque>
#include <map>

#include "epilogue/core/validate.hpp"
#include "epilogue/env/generate.hpp"
#include "epilogue/env/metadata.hpp"
#include "support/store_helpers.hpp"

using namespace epilogue;
using namespace epilogue::env;
namespace t = epilogue::testing;

namespace {

/// Replays a fixed list of timesteps; observations are f64 scalars.
class ScriptedEnv final : public Environment {
 public:
  explicit ScriptedEnv(std::vector<TimeStep> script) : script_(std::move(script)) {}
  FeatureSpec observation_spec() const override { return scalar_spec(DType::f64); }
  FeatureSpec action_spec() const override { return scalar_spec(DType::i64); }
  TimeStep reset() override { return script_.at(pos_++); }
  TimeStep step(const Nested&) override { return script_.at(pos_++); }
  Tensor render() override { return Tensor::zeros(DType::u8, {1, 1, 3}); }
  void seed(std::uint64_t) override {}

 private:
  std::vector<TimeStep> script_;
  std::size_t pos_ = 0;
};

Nested f(double v) { return Nested(Tensor::scalar(v)); }
Nested act(std::int64_t a) { return Nested(Tensor::scalar(a)); }

TimeStep ts(StepType type, double obs, double reward = 0, double discount = 1) {
  if (type == StepType::first) return TimeStep{type, {}, {}, f(obs)};
  return TimeStep{type, f(reward), f(discount), f(obs)};
}

StepRecord sar(double obs, std::int64_t a, double r, double g, bool first) {
  StepRecord s;
  s.observation = f(obs);
  s.action = act(a);
  s.reward = f(r);
  s.discount = f(g);
  s.is_first = first;
  return s;
}

StepRecord sar_last(double obs, bool terminal) {
  StepRecord s;
  s.observation = f(obs);
  s.action = act(0);
  s.reward = f(0);
  s.discount = f(0);
  s.is_last = true;
  s.is_terminal = terminal;
  return s;
}

}  // namespace

TEST_CASE("recording maps timesteps to SAR steps") {
  ScriptedEnv inner({ts(StepType::first, 0), ts(StepType::mid, 1, 0.5, 0.9),
                     ts(StepType::last, 2, 1.5, 0.0)});
  EpisodeBuffer sink(schema_for(inner));
  auto env = record(inner, sink);
  env.reset();
  env.step(act(10));
  env.step(act(11));
  REQUIRE(sink.episodes().size() == 1);
  std::vector<StepRecord> expected{sar(0, 10, 0.5, 0.9, true), sar(1, 11, 1.5, 0.0, false),
                                   sar_last(2, true)};
  CHECK(sink.episodes()[0].steps == expected);
  CHECK(validate_episode(sink.episodes()[0], sink.schema(), Alignment::sar).ok());
}

TEST_CASE("time-limit LAST is not terminal") {
  ScriptedEnv inner({ts(StepType::first, 0), ts(StepType::last, 1, 0.0, 1.0)});
  EpisodeBuffer sink(schema_for(inner));
  auto env = record(inner, sink);
  env.reset();
  env.step(act(1));
  const auto& steps = sink.episodes().at(0).steps;
  REQUIRE(steps.size() == 2);
  CHECK(steps[1].is_last);
  CHECK_FALSE(steps[1].is_terminal);
}

TEST_CASE("recorder rejects sinks with a different schema") {
  ScriptedEnv inner({});
  DatasetSchema schema = schema_for(inner);
  schema.action = scalar_spec(DType::i32);
  EpisodeBuffer sink(schema);
  CHECK_THROWS_AS(record(inner, sink), Error);
}

TEST_CASE("episode metadata survives the file roundtrip") {
  t::TempDir dir;
  GridPickPlace inner(GridPickPlace::Config{}, 3);
  FeatureSpec episode_md{{"agent_id", scalar_spec(DType::bytes)},
                         {"episode_id", scalar_spec(DType::bytes)}};
  auto path = dir / "md.rlds";
  {
    store::Writer writer(path, schema_for(inner, {}, episode_md));
    int counter = 0;
    auto env = record(inner, writer, {}, [&](Environment&) {
      return Nested{{"agent_id", Nested(Tensor::string("sac_1"))},
                    {"episode_id", Nested(Tensor::string("e" + std::to_string(17 + counter++)))}};
    });
    auto policy = planner_policy(0.0);
    Rng rng(1);
    for (int e = 0; e < 2; ++e) {
      auto step = env.reset();
      while (!step.last()) step = env.step(policy(step.observation, rng));
    }
    writer.finalize();
  }
  auto reader = store::Reader::open(path);
  REQUIRE(reader.episode_count() == 2);
  CHECK(reader.episode_metadata(0).find("agent_id")->leaf().strings()[0] == "sac_1");
  CHECK(reader.episode_metadata(0).find("episode_id")->leaf().strings()[0] == "e17");
  CHECK(reader.episode_metadata(1).find("episode_id")->leaf().strings()[0] == "e18");
}

TEST_CASE("step metadata callback sees the matching observation") {
  GridPickPlace inner(GridPickPlace::Config{400, true, 2}, 9);
  FeatureSpec step_md{{"image", FeatureSpec(LeafSpec{DType::u8, {16, 16, 3}})}};
  EpisodeBuffer sink(schema_for(inner, step_md));
  auto env = record(inner, sink, [](const TimeStep&, Environment& e) {
    return Nested{{"image", Nested(e.render())}};
  });
  auto policy = planner_policy(0.0);
  Rng rng(0);
  auto step = env.reset();
  while (!step.last()) step = env.step(policy(step.observation, rng));
  const auto& ep = sink.episodes().at(0);
  // Re-render from a fresh environment in the same state sequence.
  GridPickPlace replay(GridPickPlace::Config{400, true, 2}, 9);
  replay.reset();
  CHECK(ep.steps[0].metadata.find("image")->leaf() == replay.render());
  replay.step(ep.steps[0].action);
  CHECK(ep.steps[1].metadata.find("image")->leaf() == replay.render());
}

TEST_CASE("GridPickPlace dynamics") {
  GridPickPlace env(GridPickPlace::Config{}, 1);
  auto first = env.reset();
  CHECK(first.first());
  CHECK(first.reward.empty());
  auto s = GridPickPlace::decode_observation(first.observation);
  CHECK(s.agent != s.can);
  CHECK(s.can != s.bin);
  CHECK(s.agent != s.bin);
  CHECK_THROWS_AS(env.step(act(6)), Error);
  CHECK_THROWS_AS(env.step(f(1.0)), Error);

  SUBCASE("time limit ends with discount 1") {
    GridPickPlace limited(GridPickPlace::Config{5, true, 20}, 2);
    limited.reset();
    TimeStep last;
    for (int i = 0; i < 5; ++i) last = limited.step(act(GridPickPlace::drop));
    CHECK(last.last());
    CHECK(last.discount.leaf() == Tensor::scalar(1.0));
    CHECK(limited.step(act(0)).first());  // auto-restart
  }
  SUBCASE("success pays once and is terminal") {
    auto policy = planner_policy(0.0);
    Rng rng(0);
    TimeStep step = first;
    double total = 0;
    int positive = 0;
    while (!step.last()) {
      step = env.step(policy(step.observation, rng));
      double r = step.reward.leaf().values<double>()[0];
      total += r;
      positive += r > 0;
    }
    CHECK(total == 1.0);
    CHECK(positive == 1);
    CHECK(step.discount.leaf() == Tensor::scalar(0.0));
  }
  SUBCASE("non-terminating variant runs to the time limit with one reward") {
    GridPickPlace fixed(GridPickPlace::Config{400, false, 20}, 4);
    auto step = fixed.reset();
    auto policy = planner_policy(0.0);
    Rng rng(0);
    int positive = 0, n = 0;
    while (!step.last()) {
      step = fixed.step(policy(step.observation, rng));
      positive += step.reward.leaf().values<double>()[0] > 0;
      ++n;
    }
    CHECK(n == 400);
    CHECK(positive == 1);
    CHECK(fixed.placed());
  }
}

TEST_CASE("GridPickPlace is deterministic under a seed") {
  auto run = [](std::uint64_t seed) {
    GridPickPlace env(GridPickPlace::Config{}, seed);
    std::vector<TimeStep> out;
    Rng rng(5);
    auto policy = uniform_random_policy(6);
    auto step = env.reset();
    out.push_back(step);
    for (int i = 0; i < 900; ++i) {
      step = env.step(policy(step.observation, rng));
      out.push_back(step);
    }
    return out;
  };
  CHECK(run(12) == run(12));
  CHECK_FALSE(run(12) == run(13));
}

TEST_CASE("planner from a state next to the can") {
  GridPickPlace::State s{{3, 3}, {4, 3}, {0, 0}, false};
  CHECK(planner_action(s) == GridPickPlace::down);
  s.agent = {4, 3};
  CHECK(planner_action(s) == GridPickPlace::grab);
  s.holding = true;
  CHECK(planner_action(s) == GridPickPlace::up);
  s.agent = s.bin = {2, 5};
  CHECK(planner_action(s) == GridPickPlace::drop);
}

TEST_CASE("planner_policy validates epsilon") {
  CHECK_THROWS_AS(planner_policy(-0.1), Error);
  CHECK_THROWS_AS(planner_policy(1.5), Error);
  CHECK_NOTHROW(planner_policy(1.0));
}

TEST_CASE("uniform policy frequencies") {
  auto policy = uniform_random_policy(6);
  Rng rng(2024);
  std::array<int, 6> counts{};
  const int n = 60000;
  for (int i = 0; i < n; ++i) ++counts[policy({}, rng).leaf().values<std::int64_t>()[0]];
  for (int c : counts) {
    double freq = static_cast<double>(c) / n;
    CHECK(std::abs(freq - 1.0 / 6.0) <= 0.02 / 6.0);
  }
}

TEST_CASE("planner with epsilon 1 is uniform in distribution") {
  auto policy = planner_policy(1.0);
  GridPickPlace env(GridPickPlace::Config{}, 0);
  auto obs = env.reset().observation;
  Rng rng(99);
  std::array<int, 6> counts{};
  const int n = 60000;
  for (int i = 0; i < n; ++i) ++counts[policy(obs, rng).leaf().values<std::int64_t>()[0]];
  double chi2 = 0;
  for (int c : counts) chi2 += (c - n / 6.0) * (c - n / 6.0) / (n / 6.0);
  // 5 degrees of freedom, p = 0.001 critical value
  CHECK(chi2 < 20.52);
}

TEST_CASE("generate validates its arguments") {
  GridPickPlace env;
  EpisodeBuffer sink(schema_for(env));
  CHECK_THROWS_AS(generate(env, planner_policy(0.1), 0, 7, sink), Error);
}

TEST_CASE("generate is byte-for-byte deterministic") {
  t::TempDir dir;
  auto run = [&](const std::string& name) {
    GridPickPlace env;
    store::Writer writer(dir / name, schema_for(env));
    auto summary = generate(env, planner_policy(0.1), 200, 7, writer);
    CHECK(summary.episodes == 200);
    writer.finalize();
    return t::read_bytes(dir / name);
  };
  auto a = run("a.rlds");
  auto b = run("b.rlds");
  CHECK(a == b);
  CHECK(store::Reader::open(dir / "a.rlds").episode_count() == 200);
}

TEST_CASE("greedy planner always succeeds before the time limit") {
  GridPickPlace env;
  EpisodeBuffer sink(schema_for(env));
  generate(env, planner_policy(0.0), 200, 3, sink);
  REQUIRE(sink.episodes().size() == 200);
  for (const auto& e : sink.episodes()) {
    CHECK(e.steps.back().is_terminal);
    CHECK(e.steps.size() < 401);
    double total = 0;
    for (const auto& s : e.steps) total += s.reward.leaf().values<double>()[0];
    CHECK(total == 1.0);
  }
}

TEST_CASE("property: recorder transparency and episode shape") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    GridPickPlace plain(GridPickPlace::Config{60, seed % 2 == 0, 20}, seed);
    GridPickPlace wrapped_inner(GridPickPlace::Config{60, seed % 2 == 0, 20}, seed);
    EpisodeBuffer sink(schema_for(wrapped_inner));
    auto wrapped = record(wrapped_inner, sink);
    Rng rng(seed + 100);
    auto policy = planner_policy(0.5);
    std::uint64_t step_calls = 0;
    std::vector<std::uint64_t> calls_per_episode;
    auto step = plain.reset();
    CHECK(step == wrapped.reset());
    for (int i = 0; i < 500; ++i) {
      auto a = policy(step.observation, rng);
      step = plain.step(a);
      auto w = wrapped.step(a);
      CHECK(step == w);
      if (!step.first()) ++step_calls;
      if (step.last()) {
        calls_per_episode.push_back(step_calls);
        step_calls = 0;
      }
    }
    const auto& episodes = sink.episodes();
    REQUIRE(episodes.size() == calls_per_episode.size());
    for (std::size_t e = 0; e < episodes.size(); ++e) {
      CHECK(validate_episode(episodes[e], sink.schema(), Alignment::sar).ok());
      CHECK(episodes[e].steps.size() == calls_per_episode[e] + 1);
      CHECK(episodes[e].steps.front().is_first);
    }
    // an interrupted episode is truncated on reset
    auto before = episodes.size() + (wrapped.episode_open() ? 1 : 0);
    auto restarted = wrapped.reset();
    wrapped.step(policy(restarted.observation, rng));
    wrapped.reset();
    CHECK(sink.episodes().size() == before + 1);
    CHECK_FALSE(sink.episodes().back().steps.back().is_terminal);
  }
}

TEST_CASE("placed tag marks the step after the rewarded drop") {
  GridPickPlace::Config config;
  config.terminate_on_success = false;
  GridPickPlace env(config);
  auto md_spec = combine_specs({placed_tag_metadata_spec(), render_metadata_spec(env)});
  CHECK(md_spec.find("image")->leaf() == LeafSpec{DType::u8, {160, 160, 3}});
  EpisodeBuffer sink(schema_for(env, md_spec));
  generate(env, planner_policy(0.0), 5, 11, sink, combine_metadata({placed_tag_metadata(), render_metadata()}));
  for (const auto& e : sink.episodes()) {
    REQUIRE(e.steps.size() == 401);
    CHECK(validate_episode(e, sink.schema(), Alignment::sar).ok());
    std::vector<std::size_t> tagged;
    std::size_t rewarded = 0;
    for (std::size_t i = 0; i < e.steps.size(); ++i) {
      if (e.steps[i].metadata.find("tag:placed")->leaf().values<std::uint8_t>()[0]) tagged.push_back(i);
      if (e.steps[i].reward.leaf().values<double>()[0] == 1.0) rewarded = i;
      CHECK(e.steps[i].metadata.find("image")->leaf().shape() == Shape{160, 160, 3});
    }
    REQUIRE(tagged.size() == 1);
    CHECK(tagged[0] == rewarded + 1);
  }
}
