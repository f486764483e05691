// Acceptance run: one PASS/FAIL line per criterion. Exit status is non-zero
// when any criterion fails.

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <httplib.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#include "epilogue/catalog/catalog.hpp"
#include "epilogue/cli/cli.hpp"
#include "epilogue/collect/benchmark.hpp"
#include "epilogue/collect/server.hpp"
#include "epilogue/collect/studio.hpp"
#include "epilogue/core/validate.hpp"
#include "epilogue/env/agents.hpp"
#include "epilogue/store/reader.hpp"
#include "epilogue/transforms/absorbing.hpp"
#include "epilogue/transforms/alignment.hpp"
#include "epilogue/transforms/prepare.hpp"
#include "epilogue/transforms/sampling.hpp"
#include "epilogue/transforms/statistics.hpp"
#include "epilogue/transforms/windows.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"
#include "support/store_helpers.hpp"

using namespace epilogue;
using nlohmann::json;
namespace t = epilogue::testing;
using Clock = std::chrono::steady_clock;
using namespace std::chrono_literals;

namespace {

class Check {
 public:
  void require(bool condition, const std::string& what) {
    if (!condition && ok_) {
      ok_ = false;
      failure_ = what;
    }
  }
  void note(const std::string& text) { notes_ += (notes_.empty() ? "" : "; ") + text; }
  bool ok() const { return ok_; }
  std::string summary() const { return ok_ ? notes_ : failure_ + (notes_.empty() ? "" : " (" + notes_ + ")"); }

 private:
  bool ok_ = true;
  std::string failure_;
  std::string notes_;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int digits = 2) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(digits);
  out << v;
  return out.str();
}

template <class F>
std::optional<ErrorCode> error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

// 1. write -> finalize -> read is bit-identical for generated datasets.
void lossless_roundtrip(Check& c) {
  const auto start = Clock::now();
  t::Rng rng(1);
  t::TempDir dir;
  for (int trial = 0; trial < 100; ++trial) {
    auto schema = t::random_schema(rng);
    auto episodes = t::random_episodes(rng, schema, 20, 50);
    for (auto compression : {store::Compression::none, store::Compression::deflate}) {
      const auto path = dir / "rt.rlds";
      store::WriterOptions options{compression, 64 + t::uniform(rng, 0, 4096)};
      t::write_episodes(path, schema, episodes, options);
      auto reader = store::Reader::open(path);
      c.require(canonical_schema_document(reader.schema()) == canonical_schema_document(schema),
                "schema differs in trial " + std::to_string(trial));
      c.require(t::read_all(reader) == episodes, "episodes differ in trial " + std::to_string(trial));
    }
  }
  const double elapsed = seconds_since(start);
  c.require(elapsed < 60.0, "runtime " + fmt(elapsed) + " s >= 60 s");
  c.note("100 datasets x 2 compressions in " + fmt(elapsed) + " s");
}

// 2. Truncated files recover to an exact episode prefix; every flipped
// payload byte is either detected or harmless.
void recovery(Check& c) {
  const auto start = Clock::now();
  t::Rng rng(2);
  t::TempDir dir;
  std::uint64_t recovered_total = 0;
  std::uint64_t flips = 0;
  for (int file = 0; file < 50; ++file) {
    auto schema = t::random_schema(rng);
    std::vector<EpisodeRecord> episodes;
    const auto n = t::uniform(rng, 1, 12);
    for (std::size_t i = 0; i < n; ++i) {
      episodes.push_back(t::random_episode(rng, schema, t::uniform(rng, 1, 20), t::coin(rng)));
    }
    const auto path = dir / "orig.rlds";
    t::write_episodes(path, schema, episodes,
                      {t::coin(rng) ? store::Compression::deflate : store::Compression::none, 256});
    const auto clean = t::read_bytes(path);
    const auto header = store::Reader::open(path).header_size();
    const auto cut_path = dir / "cut.rlds";
    for (int cut = 0; cut < 10; ++cut) {
      const auto size = t::uniform(rng, header, clean.size());
      t::write_bytes(cut_path, std::vector<std::uint8_t>(clean.begin(), clean.begin() + size));
      auto [reader, report] = store::Reader::recover(cut_path);
      auto got = t::read_all(reader);
      bool prefix = got.size() <= episodes.size();
      for (std::size_t i = 0; prefix && i < got.size(); ++i) prefix = got[i] == episodes[i];
      c.require(prefix, "recovered data is not a prefix (file " + std::to_string(file) + ")");
      if (size == clean.size()) c.require(got.size() == episodes.size(), "intact file lost episodes");
      recovered_total += got.size();

      // Flipped bytes past the header are detected or harmless.
      for (int flip = 0; flip < 5; ++flip) {
        auto flipped = clean;
        const auto pos = t::uniform(rng, header, clean.size() - 1);
        flipped[pos] ^= static_cast<std::uint8_t>(1 + rng() % 255);
        t::write_bytes(cut_path, flipped);
        try {
          auto r = store::Reader::open(cut_path);
          c.require(t::read_all(r) == episodes, "silent corruption at byte " + std::to_string(pos));
        } catch (const Error&) {
        }
        ++flips;
      }
    }
  }
  const double elapsed = seconds_since(start);
  c.require(elapsed < 120.0, "runtime " + fmt(elapsed) + " s >= 120 s");
  c.note("500 truncations, " + std::to_string(recovered_total) + " episodes recovered, " + std::to_string(flips) +
         " byte flips, " + fmt(elapsed) + " s");
}

Nested f64(double v) { return Nested(Tensor::scalar(v)); }

EpisodeRecord counting_episode(std::size_t n, bool terminal) {
  EpisodeRecord e;
  for (std::size_t i = 0; i < n; ++i) {
    StepRecord s;
    s.is_first = i == 0;
    s.is_last = i + 1 == n;
    s.is_terminal = s.is_last && terminal;
    s.observation = f64(static_cast<double>(i));
    s.action = f64(s.is_last ? 0.0 : 10.0 + static_cast<double>(i));
    s.reward = f64(s.is_last ? 0.0 : 0.5 * static_cast<double>(i + 1));
    s.discount = f64(s.is_last ? 0.0 : 1.0);
    e.steps.push_back(std::move(s));
  }
  return e;
}

bool same_transitions(const std::vector<transforms::Transition>& got, const std::vector<oracle::Transition>& want) {
  if (got.size() != want.size()) return false;
  for (std::size_t i = 0; i < got.size(); ++i) {
    if (!(got[i].s_cur == want[i].s_cur && got[i].a == want[i].a && got[i].r == want[i].r &&
          got[i].s_next == want[i].s_next)) {
      return false;
    }
  }
  return true;
}

bool close_rel(double a, double b) {
  return a == b || std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b));
}

// 3. Every transform equals its brute-force twin on 200 random inputs.
void transform_oracles(Check& c) {
  using namespace transforms;
  t::Rng rng(3);
  const int trials = 200;
  for (int i = 0; i < trials; ++i) {
    auto schema = t::random_schema(rng);
    auto e = t::random_episode(rng, schema, t::uniform(rng, 1, 12), t::coin(rng));
    auto rsa = shift_alignment(e, Alignment::sar, Alignment::rsa, schema).episode;
    c.require(rsa == oracle::shift_sar_to_rsa(e, schema), "shift_alignment sar->rsa");
    c.require(shift_alignment(rsa, Alignment::rsa, Alignment::sar, schema).episode ==
                  oracle::shift_rsa_to_sar(rsa, schema),
              "shift_alignment rsa->sar");
  }
  for (int i = 0; i < trials; ++i) {
    auto steps = counting_episode(t::uniform(rng, 1, 50), t::coin(rng)).steps;
    const auto size = static_cast<std::uint32_t>(t::uniform(rng, 1, 8));
    const auto shift = static_cast<std::uint32_t>(t::uniform(rng, 1, 10));
    const bool drop = t::coin(rng);
    c.require(batch_steps(Stream<StepRecord>::from_vector(steps), size, shift, drop).collect() ==
                  oracle::batch(steps, size, shift, drop),
              "batch_steps");
  }
  for (int i = 0; i < trials; ++i) {
    auto schema = t::random_schema(rng);
    auto e = t::random_episode(rng, schema, t::uniform(rng, 1, 12), t::coin(rng));
    c.require(same_transitions(make_transitions(e).collect(), oracle::transitions(e)), "make_transitions");
  }
  for (int i = 0; i < trials; ++i) {
    auto steps = counting_episode(t::uniform(rng, 1, 50), false).steps;
    const double target = static_cast<double>(t::uniform(rng, 0, 60));
    auto cond = [target](const StepRecord& s) { return s.observation.leaf().as_double(0) == target; };
    c.require(truncate_after_condition(Stream<StepRecord>::from_vector(steps), cond).collect() ==
                  oracle::truncate(steps, cond),
              "truncate_after_condition");
  }
  for (int i = 0; i < trials; ++i) {
    auto schema = t::random_schema(rng);
    auto e = t::random_episode(rng, schema, t::uniform(rng, 1, 10), t::coin(rng));
    const std::size_t copies = t::uniform(rng, 0, 3);
    auto got = concat_if_terminal(e, [copies](const StepRecord& s) {
      return Stream<StepRecord>::from_vector(std::vector<StepRecord>(copies, s));
    });
    c.require(got == oracle::concat_if_terminal(e, copies), "concat_if_terminal");
  }
  const DType dtypes[] = {DType::f32, DType::f64, DType::i32, DType::i64, DType::u8, DType::boolean};
  for (int i = 0; i < trials; ++i) {
    DatasetSchema schema;
    schema.observation =
        FeatureSpec(LeafSpec{dtypes[i % 6], {static_cast<std::int64_t>(t::uniform(rng, 0, 5))}});
    schema.action = FeatureSpec(LeafSpec{DType::f32, {2}});
    auto e = t::random_episode(rng, schema, t::uniform(rng, 1, 10), t::coin(rng));
    c.require(to_absorbing(e) == oracle::absorbing(e), "to_absorbing");
  }
  for (int i = 0; i < trials; ++i) {
    auto schema = t::random_schema(rng);
    auto steps = t::random_episode(rng, schema, t::uniform(rng, 1, 10), false).steps;
    const auto count = static_cast<std::uint32_t>(t::uniform(rng, 0, 5));
    auto tmpl = empty_step(schema);
    c.require(pad_steps(Stream<StepRecord>::from_vector(steps), count, tmpl).collect() ==
                  oracle::pad(steps, count, tmpl),
              "pad_steps");
  }
  for (int i = 0; i < trials; ++i) {
    std::vector<EpisodeRecord> data(t::uniform(rng, 1, 20));
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    std::vector<double> xs;
    for (auto& e : data) {
      e = t::flat_episode(rng, 3, 2, t::uniform(rng, 1, 50), t::coin(rng));
      for (auto& s : e.steps) {
        if (s.is_last) continue;
        s.reward = f64(u(rng));
        xs.push_back(s.reward.leaf().as_double(0));
      }
    }
    auto want = oracle::statistics(xs);
    auto got = field_statistics(Stream<EpisodeRecord>::from_vector(data), "reward", Alignment::sar);
    c.require(got.count == want.count && close_rel(got.mean, want.mean) && close_rel(got.std, want.std) &&
                  got.min == want.min && got.max == want.max,
              "field_statistics");
  }
  for (int i = 0; i < trials; ++i) {
    std::vector<EpisodeRecord> data(t::uniform(rng, 0, 40));
    for (std::size_t j = 0; j < data.size(); ++j) {
      data[j] = counting_episode(1 + j % 3, false);
      data[j].metadata = Nested{{"id", Nested(Tensor::scalar<std::int64_t>(static_cast<std::int64_t>(j)))}};
    }
    const auto buffer = static_cast<std::uint32_t>(t::uniform(rng, 1, 40));
    const std::uint64_t seed = rng();
    const std::size_t k = t::uniform(rng, 0, 50);
    c.require(sample_episodes(Stream<EpisodeRecord>::from_vector(data), buffer, seed, k).collect() ==
                  oracle::shuffle_take(data, buffer, seed, k),
              "sample_episodes");
  }
  c.note("9 transforms x 200 trials");
}

int run_cli(std::vector<std::string> args, std::string* out = nullptr) {
  std::ostringstream o;
  std::ostringstream e;
  const int code = cli::run(args, o, e);
  if (out) *out = o.str();
  return code;
}

// 4. Record, sample K episodes, build transitions.
void sample_and_transitions(Check& c) {
  const auto start = Clock::now();
  t::TempDir dir;
  const auto data = dir / "grid.rlds";
  c.require(run_cli({"record", "--env", "gridpickplace", "--agent", "planner", "--eps", "0.1", "--episodes", "200",
                     "--seed", "7", "--out", data.string()}) == 0,
            "record failed");
  auto reader = store::Reader::open(data);
  c.require(reader.episode_count() == 200, "expected 200 episodes");
  auto all = t::read_all(reader);
  auto sampled = transforms::sample_episodes(reader.iter_episodes(), 30, 42, 5).collect();
  c.require(sampled.size() == 5, "expected 5 sampled episodes");
  c.require(sampled == oracle::shuffle_take(all, 30, 42, 5), "sample differs from the oracle");
  std::uint64_t total = 0;
  for (const auto& e : sampled) {
    const auto count = transforms::make_transitions(e).collect().size();
    c.require(count == e.steps.size() - 1, "transitions != steps - 1");
    total += count;
  }
  std::uint64_t want = 0;
  for (const auto& e : oracle::shuffle_take(all, 30, 42, 5)) want += oracle::transitions(e).size();
  c.require(total == want, "total transitions differ from the oracle");

  std::ofstream(dir / "p.json") << json{{"input", {{"path", data.string()}}},
                                        {"stages",
                                         {{{"op", "sample_episodes"}, {"buffer", 30}, {"seed", 42}, {"k", 5}},
                                          {{"op", "flatten"}},
                                          {{"op", "make_transitions"}}}},
                                        {"output", {{"report", "count"}}}}
                                       .dump();
  std::string out;
  c.require(run_cli({"pipeline", "--spec", (dir / "p.json").string(), "--format", "json"}, &out) == 0,
            "pipeline failed");
  if (!out.empty()) c.require(json::parse(out).at("count") == want, "pipeline count differs from the oracle");
  const double elapsed = seconds_since(start);
  c.require(elapsed < 30.0, "runtime " + fmt(elapsed) + " s >= 30 s");
  c.note(std::to_string(total) + " transitions from 5 of 200 episodes, " + fmt(elapsed) + " s");
}

collect::Study grid_study(collect::StepMode mode, std::uint32_t hz, bool terminate_on_success) {
  collect::Study s;
  s.name = "pick and place";
  s.instructions = "Carry the can to the bin.";
  s.mode = mode;
  s.frame_rate_hz = hz;
  s.environments = {{"gridpickplace",
                     {{"time_limit", 400}, {"terminate_on_success", terminate_on_success}, {"cell_pixels", 4}}}};
  return s;
}

json last_of(const std::vector<json>& messages, std::string_view type) {
  json found;
  for (const auto& m : messages) {
    if (m.at("type") == type) found = m;
  }
  return found;
}

env::GridPickPlace::State state_from(const json& obs) {
  auto cell = [&](const char* name) {
    const auto& v = obs.at(name).at("values");
    return env::GridPickPlace::Cell{v[0].get<std::int64_t>(), v[1].get<std::int64_t>()};
  };
  env::GridPickPlace::State s;
  s.agent = cell("agent");
  s.can = cell("can");
  s.bin = cell("bin");
  s.holding = obs.at("holding").at("values")[0].get<bool>();
  return s;
}

// 5. A successful fixed-length episode tagged at the placed step keeps a
// return of 1 after truncate-on-tag export.
void truncate_on_tag(Check& c) {
  using namespace collect;
  t::TempDir dir;
  StudyStore store(dir / "studio");
  FakeClock clock;
  auto study = store.activate_study(store.create_study(grid_study(StepMode::sync, 0, false)).id);
  Session session("sess-a", "user-a", study, store, clock, 7);
  json frame = last_of(session.apply(Event::of(EventKind::start_episode)), "frame");
  while (session.phase() == Phase::running) {
    frame = last_of(session.apply(Event::action(env::planner_action(state_from(frame.at("observation"))))),
                    "frame");
  }
  session.apply(Event::save(true));
  const auto id = session.episode_id();
  auto info = store.episode(id);
  c.require(info.num_steps == 401, "fixed-length episode should have 401 steps");
  std::size_t r = 0;
  while (r < info.rewards.size() && info.rewards[r] != 1.0) ++r;
  c.require(r < 400, "planner did not succeed");
  const std::uint64_t k = r + 1;
  store.tag(id, TagScope::step, k, "placed", true);
  ExportRequest request;
  request.truncate_on_tag = "placed";
  store.export_episodes(study.id, request, dir / "cut.rlds");
  auto episode = store::Reader::open(dir / "cut.rlds").get_episode(0);
  const double ret = transforms::episode_return(Stream<StepRecord>::from_vector(episode.steps));
  c.require(ret == 1.0, "return " + fmt(ret, 6) + " != 1");
  c.require(episode.steps.size() == k + 1, "length " + std::to_string(episode.steps.size()) + " != k+1");
  c.note("k=" + std::to_string(k) + ", length " + std::to_string(episode.steps.size()) + ", return " + fmt(ret, 1));
}

// 6. Absorbing invariants, checked directly on the output.
void absorbing_invariants(Check& c) {
  t::Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const auto width = static_cast<std::size_t>(t::uniform(rng, 0, 6));
    const bool terminal = t::coin(rng);
    auto e = t::flat_episode(rng, static_cast<std::int64_t>(width), 2, t::uniform(rng, 1, 30), terminal);
    auto out = transforms::to_absorbing(e);
    const std::size_t n = e.steps.size();
    c.require(out.steps.size() == n + (terminal ? 1 : 0), "length rule");
    for (std::size_t i = 0; i < out.steps.size(); ++i) {
      const auto obs = out.steps[i].observation.leaf().values<double>();
      c.require(obs.size() == width + 1, "width + 1");
      if (obs.size() != width + 1) continue;
      const bool absorbing = terminal && i + 1 >= n;
      c.require(obs[width] == (absorbing ? 1.0 : 0.0), "absorbing bit placement");
      if (absorbing) {
        c.require(!out.steps[i].is_last && !out.steps[i].is_terminal, "flags cleared on absorbing steps");
        for (std::size_t j = 0; j < width; ++j) c.require(obs[j] == 0.0, "absorbing observation zeroed");
      } else {
        const auto in = e.steps[i].observation.leaf().values<double>();
        for (std::size_t j = 0; j < width; ++j) c.require(obs[j] == in[j], "observation copied");
        c.require(out.steps[i].is_last == e.steps[i].is_last, "flags kept on regular steps");
      }
    }
  }
  c.note("100 episodes");
}

// 7. Recording overhead.
void logging_overhead(Check& c) {
  t::TempDir dir;
  auto report = collect::measure_recording_overhead(dir.path(), 2000);
  c.require(report.image_step_ms < 5.0, "image step " + fmt(report.image_step_ms, 3) + " ms >= 5 ms");
  c.note("scalar append " + fmt(report.scalar_append_us, 3) + " us/step (target < 50" +
         std::string(report.scalar_append_us < 50.0 ? ", met" : ", missed") + "), " +
         std::to_string(report.image_height) + "x" + std::to_string(report.image_width) + "x3 image step " +
         fmt(report.image_step_ms, 3) + " ms/step");
}

// Legality table written out independently of the implementation.
std::optional<std::pair<collect::Phase, std::optional<collect::Outcome>>> expected_rule(collect::Phase p,
                                                                                         collect::EventKind k,
                                                                                         bool confirm) {
  using collect::Outcome;
  using P = collect::Phase;
  using K = collect::EventKind;
  static const std::vector<std::tuple<P, K, int, P, std::optional<Outcome>>> kTable = {
      {P::idle, K::start_episode, -1, P::running, {}},
      {P::idle, K::select_env, -1, P::idle, {}},
      {P::idle, K::end_session, -1, P::ended, {}},
      {P::running, K::action, -1, P::running, {}},
      {P::running, K::pause, -1, P::paused, {}},
      {P::running, K::cancel, -1, P::idle, Outcome::canceled},
      {P::running, K::episode_end, -1, P::awaiting_save, {}},
      {P::running, K::end_session, -1, P::ended, Outcome::abandoned},
      {P::paused, K::unpause, -1, P::running, {}},
      {P::paused, K::pause_timeout, -1, P::ended, Outcome::abandoned},
      {P::paused, K::cancel, -1, P::idle, Outcome::canceled},
      {P::paused, K::end_session, -1, P::ended, Outcome::abandoned},
      {P::awaiting_save, K::save, 1, P::idle, Outcome::completed},
      {P::awaiting_save, K::save, 0, P::idle, Outcome::rejected},
      {P::awaiting_save, K::end_session, -1, P::ended, Outcome::abandoned},
  };
  for (const auto& [phase, kind, conf, next, outcome] : kTable) {
    if (phase == p && kind == k && (conf < 0 || conf == static_cast<int>(confirm))) {
      return std::make_pair(next, outcome);
    }
  }
  return std::nullopt;
}

collect::Phase drive_to(collect::Session& s, collect::Phase target) {
  using namespace collect;
  switch (target) {
    case Phase::idle: break;
    case Phase::running: s.apply(Event::of(EventKind::start_episode)); break;
    case Phase::paused:
      s.apply(Event::of(EventKind::start_episode));
      s.apply(Event::of(EventKind::pause));
      break;
    case Phase::awaiting_save:
      s.apply(Event::of(EventKind::start_episode));
      s.apply(Event::of(EventKind::episode_end));
      break;
    case Phase::ended: s.apply(Event::of(EventKind::end_session)); break;
  }
  return s.phase();
}

collect::Event event_for(collect::EventKind kind, bool confirm) {
  using namespace collect;
  switch (kind) {
    case EventKind::action: return Event::action(0);
    case EventKind::save: return Event::save(confirm);
    case EventKind::select_env: return Event::select_env(0);
    case EventKind::pause_timeout: return Event::of(kind);
    default: return Event::of(kind);
  }
}

void headless_client(Check& c) {
  namespace beast = boost::beast;
  namespace websocket = beast::websocket;
  using tcp = boost::asio::ip::tcp;
  using namespace collect;

  t::TempDir dir;
  StudyStore store(dir.path());
  SteadyClock clock;
  Studio studio(store, clock);
  ServerOptions options;
  options.port = 0;
  Server server(studio, options);
  server.start();

  httplib::Client http("127.0.0.1", server.port());
  auto created = http.Post("/studies", study_to_json(grid_study(StepMode::sync, 0, true)).dump(), "application/json");
  c.require(created && created->status == 201, "study creation over HTTP");
  if (!created || created->status != 201) return server.stop();
  const auto study_id = json::parse(created->body).at("id").get<std::string>();
  c.require(http.Post("/studies/" + study_id + "/activate", "", "application/json")->status == 200, "activate");

  boost::asio::io_context io;
  tcp::resolver resolver(io);
  websocket::stream<tcp::socket> ws(io);
  boost::asio::connect(ws.next_layer(), resolver.resolve("127.0.0.1", std::to_string(server.port())));
  ws.handshake("127.0.0.1", "/");
  auto send = [&](const json& doc) { ws.write(boost::asio::buffer(doc.dump())); };
  auto receive_until = [&](std::string_view type) {
    std::vector<json> seen;
    for (;;) {
      beast::flat_buffer buffer;
      ws.read(buffer);
      seen.push_back(json::parse(beast::buffers_to_string(buffer.data())));
      if (seen.back().at("type") == type) return seen;
    }
  };
  send({{"v", 1}, {"type", "start_session"}, {"study", study_id}, {"user", "script"}});
  receive_until("state");
  send({{"type", "start_episode"}});
  receive_until("state");
  const int actions = 20;
  for (int i = 0; i < actions; ++i) {
    send({{"type", "action"}, {"value", i % 2 ? 2 : 3}});
    receive_until("state");
  }
  send({{"type", "episode_end"}});
  receive_until("state");
  send({{"type", "save"}, {"confirm", true}});
  auto seen = receive_until("state");
  c.require(seen.back().value("outcome", "") == "completed", "client save should complete the episode");
  ws.close(websocket::close_code::normal);
  auto episodes = http.Get("/studies/" + study_id + "/episodes");
  c.require(episodes && json::parse(episodes->body).at("episodes").at(0).at("num_steps") == actions + 1,
            "server recorded a different number of steps");
  server.stop();
}

// 8. Session state machine.
void state_machine(Check& c) {
  using namespace collect;
  int pairs = 0;
  for (Phase p : kAllPhases) {
    for (EventKind k : kAllEvents) {
      for (bool confirm : {false, true}) {
        ++pairs;
        auto rule = transition_rule(p, k, confirm);
        auto want = expected_rule(p, k, confirm);
        c.require(rule.has_value() == want.has_value(), "table legality for " + std::string(phase_name(p)) + " x " +
                                                            std::string(event_name(k)));
        if (rule && want) c.require(rule->next == want->first && rule->outcome == want->second, "table entry");

        t::TempDir dir;
        StudyStore store(dir / "studio");
        FakeClock clock;
        auto study = store.activate_study(store.create_study(grid_study(StepMode::sync, 0, true)).id);
        Session s("sess", "user", study, store, clock, 1);
        if (drive_to(s, p) != p) {
          c.require(false, "could not reach phase " + std::string(phase_name(p)));
          continue;
        }
        const auto code = error_of([&] { s.apply(event_for(k, confirm)); });
        if (!want) {
          c.require(code == ErrorCode::illegal_event && s.phase() == p, "illegal event accepted");
          continue;
        }
        c.require(!code && s.phase() == want->first, "live transition");
        if (want->second) {
          c.require(s.last_outcome() == want->second, "live outcome");
          c.require(store.episode(s.episode_id()).outcome == *want->second, "stored outcome");
        }
      }
    }
  }

  {
    t::TempDir dir;
    StudyStore store(dir / "studio");
    FakeClock clock;
    auto study = store.activate_study(store.create_study(grid_study(StepMode::sync, 0, true)).id);
    Session s("sess", "user", study, store, clock, 1);
    s.apply(Event::of(EventKind::start_episode));
    s.apply(Event::of(EventKind::pause));
    clock.advance(119s);
    s.tick();
    c.require(s.phase() == Phase::paused, "paused session ended before the timeout");
    clock.advance(2s);
    s.tick();
    c.require(s.last_outcome() == Outcome::abandoned, "pause timeout should abandon");
  }

  t::Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    t::TempDir dir;
    StudyStore store(dir / "studio");
    FakeClock clock;
    const auto hz = static_cast<std::uint32_t>(t::uniform(rng, 1, 60));
    auto config = grid_study(StepMode::async, hz, true);
    config.environments[0].config["time_limit"] = 100000;
    auto study = store.activate_study(store.create_study(config).id);
    Session s("sess", "user", study, store, clock, 1);
    s.apply(Event::of(EventKind::start_episode));
    std::int64_t running_ns = 0;
    for (int i = 0; i < 30; ++i) {
      const auto dt = std::chrono::nanoseconds(static_cast<std::int64_t>(rng() % 300'000'000));
      clock.advance(dt);
      running_ns += dt.count();
      if (t::coin(rng, 0.2)) {
        s.tick();
        s.apply(Event::of(EventKind::pause));
        clock.advance(std::chrono::milliseconds(rng() % 5000));
        s.apply(Event::of(EventKind::unpause));
      }
      s.tick();
      const auto want = static_cast<std::uint64_t>(std::floor(static_cast<long double>(running_ns) * hz / 1e9L));
      c.require(s.episode_steps() == want, "async steps != floor(T*hz) at hz=" + std::to_string(hz));
    }
  }
  headless_client(c);
  c.note(std::to_string(pairs) + " (phase, event, confirm) cases, 50 async schedules, 20-action websocket client");
}

// 9. Catalog slicing and tamper detection.
void catalog_checks(Check& c) {
  t::TempDir dir;
  t::Rng rng(9);
  auto schema = t::flat_schema(3, 2);
  schema.episode_metadata = FeatureSpec{{"id", scalar_spec(DType::i64)}};
  std::vector<EpisodeRecord> train;
  std::vector<std::filesystem::path> files;
  for (int f = 0; f < 3; ++f) {
    std::vector<EpisodeRecord> part;
    for (int i = 0; i < 4 + f; ++i) {
      auto e = t::flat_episode(rng, 3, 2, t::uniform(rng, 1, 6), t::coin(rng));
      e.metadata = Nested{{"id", Nested(Tensor::scalar<std::int64_t>(static_cast<std::int64_t>(train.size())))}};
      part.push_back(e);
      train.push_back(e);
    }
    files.push_back(dir / ("train-" + std::to_string(f) + ".rlds"));
    t::write_episodes(files.back(), schema, part);
  }
  catalog::Manifest base;
  base.name = "toy";
  base.version = "1.0.0";
  base.description = "toy pick and place demonstrations";
  base.citation = "@misc{toy}";
  base.license = "CC-BY-4.0";
  base.homepage = "https://example.org/toy";
  catalog::Catalog cat(dir / "store", dir / "cache");
  cat.register_dataset(catalog::describe_files(base, {{"train", files}}));

  const auto n = train.size();
  int slices = 0;
  for (std::size_t a = 0; a <= n + 1; ++a) {
    for (std::size_t b = a; b <= n + 2; ++b, ++slices) {
      auto got = cat.load("toy", "train[" + std::to_string(a) + ":" + std::to_string(b) + "]").episodes.collect();
      const auto lo = std::min(a, n);
      const auto hi = std::min(b, n);
      c.require(got == std::vector<EpisodeRecord>(train.begin() + lo, train.begin() + hi),
                "slice [" + std::to_string(a) + ":" + std::to_string(b) + "]");
    }
  }

  int tampered = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto& file = files[t::uniform(rng, 0, files.size() - 1)];
    const auto clean = t::read_bytes(file);
    auto bytes = clean;
    bytes[t::uniform(rng, 0, bytes.size() - 1)] ^= static_cast<std::uint8_t>(1 + rng() % 255);
    t::write_bytes(file, bytes);
    const auto code = error_of([&] { cat.load("toy", "train[0:1]"); });
    c.require(code == ErrorCode::checksum_mismatch, "tampering not detected");
    t::write_bytes(file, clean);
    ++tampered;
  }
  c.require(!error_of([&] { cat.load("toy", "train"); }), "restored files should load");
  c.note(std::to_string(slices) + " slices, " + std::to_string(tampered) + " tampered files detected");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria = {
      {"lossless roundtrip", lossless_roundtrip},
      {"recovery", recovery},
      {"transform oracle equivalence", transform_oracles},
      {"sample and transitions pipeline", sample_and_transitions},
      {"truncate on placed tag", truncate_on_tag},
      {"absorbing invariants", absorbing_invariants},
      {"logging overhead", logging_overhead},
      {"session state machine", state_machine},
      {"catalog slicing and checksums", catalog_checks},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check check;
    try {
      criteria[i].second(check);
    } catch (const std::exception& e) {
      check.require(false, std::string("exception: ") + e.what());
    }
    if (!check.ok()) ++failed;
    std::cout << (check.ok() ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": "
              << check.summary() << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
