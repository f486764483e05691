#include "epilogue/cli/cli.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include <unistd.h>

#include "epilogue/cli/pipeline.hpp"
#include "epilogue/collect/benchmark.hpp"
#include "epilogue/collect/server.hpp"
#include "epilogue/core/validate.hpp"
#include "epilogue/env/generate.hpp"
#include "epilogue/env/metadata.hpp"
#include "epilogue/store/reader.hpp"
#include "epilogue/store/writer.hpp"
#include "epilogue/transforms/alignment.hpp"
#include "epilogue/transforms/statistics.hpp"

namespace epilogue::cli {
namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::bad_magic:
    case ErrorCode::unsupported_version:
    case ErrorCode::missing_footer:
    case ErrorCode::io_failure:
    case ErrorCode::invalid_schema:
    case ErrorCode::invalid_episode:
    case ErrorCode::flag_sequence_violation:
    case ErrorCode::dangling_episode:
    case ErrorCode::schema_mismatch:
      return exit_format;
    case ErrorCode::chunk_corrupt:
    case ErrorCode::corrupt_record:
    case ErrorCode::checksum_mismatch:
    case ErrorCode::schema_digest_mismatch:
      return exit_corruption;
    case ErrorCode::episode_out_of_range:
    case ErrorCode::step_out_of_range:
      return exit_usage;
    case ErrorCode::pipeline_kind_mismatch:
      return exit_kind_mismatch;
    default:
      return exit_config;
  }
}

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

Alignment file_alignment(const DatasetSchema& schema) {
  auto it = schema.dataset_metadata.find("alignment");
  if (it == schema.dataset_metadata.end() || !it->is_string()) return Alignment::sar;
  auto a = parse_alignment(it->get<std::string>());
  if (!a) fail(ErrorCode::invalid_argument, "dataset_metadata.alignment is " + it->dump());
  return *a;
}

std::string quoted(const std::string& s) { return json(s).dump(); }

// "f64[2] [1, 2]"; long tensors are elided after 16 elements.
std::string tensor_text(const Tensor& t) {
  std::ostringstream os;
  os << dtype_name(t.dtype()) << "[";
  for (std::size_t i = 0; i < t.shape().size(); ++i) os << (i ? "," : "") << t.shape()[i];
  os << "]";
  const std::size_t n = t.size();
  const std::size_t shown = std::min<std::size_t>(n, 16);
  os << (t.shape().empty() ? " " : " [");
  for (std::size_t i = 0; i < shown; ++i) {
    if (i) os << ", ";
    if (t.dtype() == DType::bytes) {
      os << quoted(t.strings()[i]);
    } else if (t.dtype() == DType::boolean) {
      os << (t.as_double(i) != 0 ? "true" : "false");
    } else {
      os << std::setprecision(17) << t.as_double(i);
    }
  }
  if (shown < n) os << ", ... (" << n << " values)";
  if (!t.shape().empty()) os << "]";
  return os.str();
}

void tree_text(std::ostream& out, const std::string& prefix, const Nested& tree) {
  if (tree.is_leaf()) {
    out << prefix << "=" << tensor_text(tree.leaf()) << "\n";
    return;
  }
  if (tree.children().empty()) {
    out << prefix << "={}\n";
    return;
  }
  for (const auto& e : tree.children()) tree_text(out, prefix + "/" + e.name, e.value);
}

json tensor_json(const Tensor& t) {
  json values = json::array();
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t.dtype() == DType::bytes) {
      values.push_back(t.strings()[i]);
    } else if (t.dtype() == DType::boolean) {
      values.push_back(t.as_double(i) != 0);
    } else {
      values.push_back(t.as_double(i));
    }
  }
  return json{{"dtype", dtype_name(t.dtype())}, {"shape", t.shape()}, {"values", values}};
}

json tree_json(const Nested& tree) {
  if (tree.is_leaf()) return tensor_json(tree.leaf());
  json out = json::object();
  for (const auto& e : tree.children()) out[e.name] = tree_json(e.value);
  return out;
}

json step_json(const StepRecord& s) {
  return json{{"is_first", s.is_first},         {"is_last", s.is_last},
              {"is_terminal", s.is_terminal},   {"observation", tree_json(s.observation)},
              {"action", tree_json(s.action)},  {"reward", tree_json(s.reward)},
              {"discount", tree_json(s.discount)}, {"metadata", tree_json(s.metadata)}};
}

void step_text(std::ostream& out, const StepRecord& s) {
  out << "is_first=" << (s.is_first ? "true" : "false") << "\n";
  out << "is_last=" << (s.is_last ? "true" : "false") << "\n";
  out << "is_terminal=" << (s.is_terminal ? "true" : "false") << "\n";
  tree_text(out, "observation", s.observation);
  tree_text(out, "action", s.action);
  tree_text(out, "reward", s.reward);
  tree_text(out, "discount", s.discount);
  tree_text(out, "metadata", s.metadata);
}

json schema_json(const DatasetSchema& schema) {
  json doc = json::parse(canonical_schema_document(schema));
  doc["dataset_metadata"] = schema.dataset_metadata;
  return doc;
}

int cmd_inspect(const std::string& file, std::optional<std::uint64_t> episode, std::optional<std::uint64_t> step,
                bool as_json, std::ostream& out) {
  auto reader = store::Reader::open(file);
  if (episode) {
    if (step) {
      auto s = reader.get_step(*episode, *step);
      if (as_json) {
        json doc = step_json(s);
        doc["v"] = 1;
        doc["episode"] = *episode;
        doc["step"] = *step;
        out << doc.dump(2) << "\n";
      } else {
        out << "episode " << *episode << " step " << *step << "\n";
        step_text(out, s);
      }
      return exit_ok;
    }
    auto e = reader.get_episode(*episode);
    if (as_json) {
      json steps = json::array();
      for (const auto& s : e.steps) steps.push_back(step_json(s));
      out << json{{"v", 1}, {"episode", *episode}, {"num_steps", e.steps.size()},
                  {"metadata", tree_json(e.metadata)}, {"steps", steps}}
                 .dump(2)
          << "\n";
    } else {
      out << "episode " << *episode << "\nnum_steps=" << e.steps.size() << "\n";
      tree_text(out, "metadata", e.metadata);
      for (std::size_t j = 0; j < e.steps.size(); ++j) {
        out << "-- step " << j << "\n";
        step_text(out, e.steps[j]);
      }
    }
    return exit_ok;
  }

  // Decoding every episode checks each chunk's CRC.
  for (auto& e : reader.iter_episodes()) (void)e;
  std::vector<std::uint64_t> counts;
  for (const auto& entry : reader.index()) counts.push_back(entry.num_steps);
  const auto& schema = reader.schema();
  if (as_json) {
    out << json{{"v", 1},
                {"path", file},
                {"format", "rlds"},
                {"version", 1},
                {"header_bytes", reader.header_size()},
                {"file_bytes", fs::file_size(file)},
                {"episodes", reader.episode_count()},
                {"total_steps", reader.total_steps()},
                {"alignment", alignment_name(file_alignment(schema))},
                {"schema", schema_json(schema)},
                {"num_steps", counts}}
               .dump(2)
        << "\n";
    return exit_ok;
  }
  out << "file: " << file << "\n";
  out << "format: rlds v1, " << fs::file_size(file) << " bytes, header " << reader.header_size() << " bytes\n";
  out << "episodes: " << reader.episode_count() << "\n";
  out << "total_steps: " << reader.total_steps() << "\n";
  out << "alignment: " << alignment_name(file_alignment(schema)) << "\n";
  out << "schema: " << schema_json(schema).dump(2) << "\n";
  out << "num_steps: [";
  for (std::size_t i = 0; i < counts.size(); ++i) out << (i ? "," : "") << counts[i];
  out << "]\n";
  return exit_ok;
}

int cmd_validate(const std::string& file, bool as_json, std::ostream& out) {
  auto reader = store::Reader::open(file);
  const auto alignment = file_alignment(reader.schema());
  json failures = json::array();
  std::uint64_t index = 0;
  for (auto& e : reader.iter_episodes()) {
    auto report = validate_episode(e, reader.schema(), alignment);
    if (!report.ok()) failures.push_back(json{{"episode", index}, {"violations", report.to_string()}});
    ++index;
  }
  if (as_json) {
    out << json{{"v", 1}, {"episodes", index}, {"valid", failures.empty()}, {"failures", failures}}.dump(2) << "\n";
  } else {
    for (const auto& f : failures) {
      out << "episode " << f["episode"].get<std::uint64_t>() << ": " << f["violations"].get<std::string>() << "\n";
    }
    out << index << " episodes, " << failures.size() << " invalid\n";
  }
  return failures.empty() ? exit_ok : exit_format;
}

void histogram_text(std::ostream& out, const json& bins) {
  out << "bin_left\tbin_right\tcount\n";
  for (const auto& b : bins) {
    out << std::setprecision(10) << b["bin_left"].get<double>() << "\t" << b["bin_right"].get<double>() << "\t"
        << b["count"].get<std::uint64_t>() << "\n";
  }
}

int cmd_stats(const std::string& file, const std::string& field, std::size_t bins, bool as_json, std::ostream& out) {
  auto reader = store::Reader::open(file);
  const auto alignment = file_alignment(reader.schema());
  auto stats = transforms::field_statistics(reader.iter_episodes(), field, alignment);
  json doc{{"v", 1},
           {"field", field},
           {"count", stats.count},
           {"mean", stats.mean},
           {"std", stats.std},
           {"min", stats.min},
           {"max", stats.max}};
  if (bins > 0) {
    std::vector<double> values;
    for (auto& e : reader.iter_episodes()) {
      for (const auto& s : e.steps) {
        if (!transforms::selector_defined(s, field, alignment)) continue;
        const Tensor& t = transforms::select_field(s, field);
        for (std::size_t i = 0; i < t.size(); ++i) values.push_back(t.as_double(i));
      }
    }
    json table = json::array();
    for (const auto& b : transforms::histogram(values, bins)) {
      table.push_back(json{{"bin_left", b.left}, {"bin_right", b.right}, {"count", b.count}});
    }
    doc["bins"] = table;
  }
  if (as_json) {
    out << doc.dump(2) << "\n";
    return exit_ok;
  }
  out << "field: " << field << "\n" << std::setprecision(17);
  out << "count: " << stats.count << "\n";
  out << "mean: " << stats.mean << "\n";
  out << "std: " << stats.std << "\n";
  out << "min: " << stats.min << "\n";
  out << "max: " << stats.max << "\n";
  if (doc.contains("bins")) histogram_text(out, doc["bins"]);
  return exit_ok;
}

int cmd_convert(const std::string& target, const std::string& in, const std::string& out_path, std::ostream& out) {
  auto to = parse_alignment(target);
  if (!to) fail(ErrorCode::invalid_argument, "--alignment must be sar or rsa");
  auto reader = store::Reader::open(in);
  const auto from = file_alignment(reader.schema());
  DatasetSchema schema = reader.schema();
  schema.dataset_metadata["alignment"] = std::string(alignment_name(*to));
  store::Writer writer(out_path, schema);
  for (auto& e : reader.iter_episodes()) {
    auto shifted = transforms::shift_alignment(e, from, *to, reader.schema());
    for (const auto& s : shifted.episode.steps) writer.append_step(s);
    writer.end_episode(shifted.episode.metadata);
  }
  auto summary = writer.finalize();
  out << "converted " << summary.episodes << " episodes (" << summary.steps << " steps) from "
      << alignment_name(from) << " to " << alignment_name(*to) << "\n";
  return exit_ok;
}

struct RecordArgs {
  std::string env = "gridpickplace";
  std::string agent = "planner";
  double eps = 0.0;
  std::uint64_t episodes = 0;
  std::uint64_t seed = 0;
  std::string out;
  std::int64_t time_limit = 400;
  bool fixed_length = false;
  bool images = false;
};

int cmd_record(const RecordArgs& a, std::ostream& out) {
  if (a.env != "gridpickplace") fail(ErrorCode::invalid_argument, "unknown environment '" + a.env + "'");
  if (a.time_limit <= 0) fail(ErrorCode::invalid_argument, "--time-limit must be positive");
  env::GridPickPlace::Config config;
  config.time_limit = a.time_limit;
  config.terminate_on_success = !a.fixed_length;
  env::GridPickPlace grid(config);
  env::Policy policy;
  if (a.agent == "planner") {
    policy = env::planner_policy(a.eps);
  } else if (a.agent == "random") {
    policy = env::uniform_random_policy(grid.num_actions());
  } else {
    fail(ErrorCode::invalid_argument, "unknown agent '" + a.agent + "'");
  }
  std::vector<env::StepMetadataFn> parts{env::placed_tag_metadata()};
  std::vector<FeatureSpec> specs{env::placed_tag_metadata_spec()};
  if (a.images) {
    parts.push_back(env::render_metadata());
    specs.push_back(env::render_metadata_spec(grid));
  }
  DatasetSchema schema = env::schema_for(grid, env::combine_specs(specs));
  schema.dataset_metadata = json{{"alignment", "sar"},
                                 {"env", a.env},
                                 {"agent", a.agent},
                                 {"eps", a.eps},
                                 {"seed", a.seed},
                                 {"time_limit", a.time_limit},
                                 {"fixed_length", a.fixed_length}};
  store::Writer writer(a.out, schema);
  auto summary = env::generate(grid, policy, a.episodes, a.seed, writer, env::combine_metadata(parts));
  auto written = writer.finalize();
  out << "recorded " << summary.episodes << " episodes, " << summary.steps << " steps, " << written.bytes
      << " bytes to " << a.out << "\n";
  return exit_ok;
}

fs::path cache_dir_from_env() {
  const char* dir = std::getenv("EPILOGUE_CACHE_DIR");
  return dir && *dir ? fs::path(dir) : fs::path();
}

int cmd_pipeline(const std::string& spec_path, bool as_json, std::ostream& out) {
  std::ifstream in(spec_path, std::ios::binary);
  if (!in) fail(ErrorCode::io_failure, "cannot read " + spec_path);
  std::stringstream buf;
  buf << in.rdbuf();
  auto doc = json::parse(buf.str(), nullptr, false);
  if (doc.is_discarded()) fail(ErrorCode::invalid_argument, spec_path + " is not JSON");
  auto spec = parse_pipeline_spec(doc, fs::path(spec_path).parent_path());
  auto report = run_pipeline(spec, cache_dir_from_env());
  if (as_json) {
    out << report.dump(2) << "\n";
    return exit_ok;
  }
  const std::string kind = report["report"];
  if (kind == "file") {
    out << "wrote " << report["episodes"] << " episodes (" << report["steps"] << " steps, " << report["bytes"]
        << " bytes) to " << report["path"].get<std::string>() << "\n";
  } else if (kind == "count") {
    out << report["kind"].get<std::string>() << " count: " << report["count"] << "\n";
  } else if (kind == "stats") {
    const auto& s = report["statistics"];
    out << std::setprecision(17) << "field: " << report["field"].get<std::string>() << "\ncount: " << s["count"]
        << "\nmean: " << s["mean"].get<double>() << "\nstd: " << s["std"].get<double>()
        << "\nmin: " << s["min"].get<double>() << "\nmax: " << s["max"].get<double>() << "\n";
  } else {
    histogram_text(out, report["bins"]);
  }
  return exit_ok;
}

struct ServeArgs {
  std::string root = "studio";
  std::string host = "127.0.0.1";
  std::uint16_t port = 8080;
  bool benchmark = false;
  std::uint64_t steps = 2000;
};

int cmd_serve(const ServeArgs& a, std::ostream& out) {
  if (a.benchmark) {
    const fs::path scratch = fs::temp_directory_path() / ("epilogue-bench-" + std::to_string(::getpid()));
    auto report = collect::measure_recording_overhead(scratch, a.steps);
    std::error_code ec;
    fs::remove_all(scratch, ec);
    out << std::fixed << std::setprecision(3);
    out << "steps: " << report.steps << "\n";
    out << "scalar append: " << report.scalar_append_us << " us/step\n";
    out << "image step (" << report.image_height << "x" << report.image_width
        << " RGB, render + PNG + write): " << report.image_step_ms << " ms/step\n";
    return exit_ok;
  }
  collect::StudyStore store(a.root);
  collect::SteadyClock clock;
  collect::Studio studio(store, clock);
  collect::ServerOptions options;
  options.host = a.host;
  options.port = a.port;
  collect::Server server(studio, options);
  server.start();
  out << "serving " << fs::absolute(a.root).string() << " on http://" << a.host << ":" << server.port() << "\n"
      << std::flush;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  return exit_ok;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Episode dataset tools: inspect, transform, record and collect .rlds files", "epilogue"};
  app.require_subcommand(1);

  std::string format = "text";
  auto add_format = [&format](CLI::App* cmd) {
    cmd->add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "json"}));
  };

  std::string file;
  std::optional<std::uint64_t> episode;
  std::optional<std::uint64_t> step;
  auto* inspect = app.add_subcommand("inspect", "Print the header, schema and episode index of a file");
  inspect->add_option("file", file)->required();
  auto* episode_opt = inspect->add_option("--episode", episode, "Dump one episode");
  inspect->add_option("--step", step, "Dump one step of --episode")->needs(episode_opt);
  add_format(inspect);

  auto* validate = app.add_subcommand("validate", "Check every episode against the schema and alignment");
  validate->add_option("file", file)->required();
  add_format(validate);

  std::string field;
  std::size_t bins = 0;
  auto* stats = app.add_subcommand("stats", "Statistics of one field over all steps");
  stats->add_option("file", file)->required();
  stats->add_option("--field", field, "Field selector, e.g. reward or observation/agent")->required();
  stats->add_option("--bins", bins, "Also print a histogram with this many bins");
  add_format(stats);

  std::string alignment;
  std::string input;
  std::string output;
  auto* convert = app.add_subcommand("convert", "Rewrite a file in another step alignment");
  convert->add_option("--alignment", alignment, "Target alignment (sar or rsa)")->required();
  convert->add_option("input", input)->required();
  convert->add_option("output", output)->required();

  RecordArgs rec;
  auto* record = app.add_subcommand("record", "Record agent episodes in an environment");
  record->add_option("--env", rec.env, "Environment name")->required();
  record->add_option("--agent", rec.agent, "planner or random")->required();
  record->add_option("--eps", rec.eps, "Random action probability for the planner");
  record->add_option("--episodes", rec.episodes, "Number of episodes")->required();
  record->add_option("--seed", rec.seed, "Seed")->required();
  record->add_option("--out", rec.out, "Output file")->required();
  record->add_option("--time-limit", rec.time_limit, "Steps per episode before truncation");
  record->add_flag("--fixed-length", rec.fixed_length, "Keep running after success until the time limit");
  record->add_flag("--images", rec.images, "Store rendered frames as step metadata");

  std::string spec;
  auto* pipeline = app.add_subcommand("pipeline", "Run a pipeline document");
  pipeline->add_option("--spec", spec, "Pipeline document")->required();
  add_format(pipeline);

  ServeArgs serve_args;
  auto* serve = app.add_subcommand("serve", "Run the collection server");
  serve->add_option("--root", serve_args.root, "Study store directory");
  serve->add_option("--host", serve_args.host, "Bind address");
  serve->add_option("--port", serve_args.port, "Port (0 picks one)");
  serve->add_flag("--benchmark", serve_args.benchmark, "Measure recording overhead and exit");
  serve->add_option("--steps", serve_args.steps, "Benchmark steps");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_usage;
  }

  const bool as_json = format == "json";
  try {
    if (*inspect) return cmd_inspect(file, episode, step, as_json, out);
    if (*validate) return cmd_validate(file, as_json, out);
    if (*stats) return cmd_stats(file, field, bins, as_json, out);
    if (*convert) return cmd_convert(alignment, input, output, out);
    if (*record) return cmd_record(rec, out);
    if (*pipeline) return cmd_pipeline(spec, as_json, out);
    if (*serve) return cmd_serve(serve_args, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_config;
  }
  return exit_usage;
}

}  // namespace epilogue::cli
