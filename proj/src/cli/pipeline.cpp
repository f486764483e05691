#include "epilogue/cli/pipeline.hpp"

#include <map>

#include "epilogue/catalog/catalog.hpp"
#include "epilogue/store/reader.hpp"
#include "epilogue/store/writer.hpp"
#include "epilogue/transforms/absorbing.hpp"
#include "epilogue/transforms/alignment.hpp"
#include "epilogue/transforms/mapping.hpp"
#include "epilogue/transforms/prepare.hpp"
#include "epilogue/transforms/sampling.hpp"
#include "epilogue/transforms/statistics.hpp"
#include "epilogue/transforms/windows.hpp"

namespace epilogue::cli {
namespace fs = std::filesystem;
using nlohmann::json;
namespace tf = epilogue::transforms;

std::string_view stream_kind_name(StreamKind kind) {
  switch (kind) {
    case StreamKind::episode: return "episode";
    case StreamKind::step: return "step";
    case StreamKind::transition: return "transition";
    case StreamKind::window: return "window";
  }
  return "?";
}

namespace {

struct OpKinds {
  StreamKind in;
  StreamKind out;
};

const std::map<std::string, OpKinds>& op_table() {
  using K = StreamKind;
  static const std::map<std::string, OpKinds> kOps = {
      {"take", {K::episode, K::episode}},
      {"sample_episodes", {K::episode, K::episode}},
      {"shift_alignment", {K::episode, K::episode}},
      {"to_absorbing", {K::episode, K::episode}},
      {"flatten_observation", {K::episode, K::episode}},
      {"truncate_after_condition", {K::episode, K::episode}},
      {"concat_if_terminal", {K::episode, K::episode}},
      {"pad_steps", {K::episode, K::episode}},
      {"flatten", {K::episode, K::step}},
      {"make_transitions", {K::step, K::transition}},
      {"batch_steps", {K::step, K::window}},
  };
  return kOps;
}

template <class T>
T param(const PipelineStage& stage, const char* key) {
  auto it = stage.params.find(key);
  if (it == stage.params.end()) {
    fail(ErrorCode::invalid_argument, stage.op + " needs '" + key + "'");
  }
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::invalid_argument, stage.op + ": bad '" + key + "'");
  }
}

template <class T>
T param_or(const PipelineStage& stage, const char* key, T fallback) {
  return stage.params.contains(key) ? param<T>(stage, key) : fallback;
}

fs::path resolve(const fs::path& base, const fs::path& p) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

Alignment alignment_of(const DatasetSchema& schema) {
  auto it = schema.dataset_metadata.find("alignment");
  if (it == schema.dataset_metadata.end() || !it->is_string()) return Alignment::sar;
  auto a = parse_alignment(it->get<std::string>());
  if (!a) fail(ErrorCode::invalid_argument, "dataset_metadata.alignment is " + it->dump());
  return *a;
}

// Items flowing between stages. Step and window streams stay grouped by
// episode so windows and transitions never straddle an episode boundary.
struct Flow {
  StreamKind kind = StreamKind::episode;
  Stream<EpisodeRecord> episodes;
  Stream<tf::Transition> transitions;
  Stream<tf::StepWindow> windows;
  DatasetSchema schema;
  Alignment alignment = Alignment::sar;
};

void apply_stage(Flow& flow, const PipelineStage& stage) {
  const std::string& op = stage.op;
  if (op == "take") {
    flow.episodes = std::move(flow.episodes).take(param<std::uint64_t>(stage, "n"));
  } else if (op == "sample_episodes") {
    flow.episodes = tf::sample_episodes(std::move(flow.episodes), param<std::uint32_t>(stage, "buffer"),
                                        param<std::uint64_t>(stage, "seed"), param<std::uint64_t>(stage, "k"));
  } else if (op == "shift_alignment") {
    auto to = parse_alignment(param<std::string>(stage, "to"));
    if (!to) fail(ErrorCode::invalid_argument, "shift_alignment: 'to' must be sar or rsa");
    const Alignment from = flow.alignment;
    flow.episodes = tf::apply_episodes(std::move(flow.episodes),
                                       [from, to = *to, schema = flow.schema](EpisodeRecord e) {
                                         return tf::shift_alignment(e, from, to, schema).episode;
                                       });
    flow.alignment = *to;
    flow.schema.dataset_metadata["alignment"] = std::string(alignment_name(*to));
  } else if (op == "to_absorbing") {
    if (flow.alignment != Alignment::sar) fail(ErrorCode::invalid_argument, "to_absorbing needs SAR episodes");
    flow.episodes = tf::to_absorbing(std::move(flow.episodes));
    flow.schema = tf::absorbing_schema(flow.schema);
  } else if (op == "flatten_observation") {
    auto paths = param<std::vector<std::string>>(stage, "paths");
    flow.schema = tf::flattened_schema(flow.schema, paths);
    flow.episodes = tf::map_steps(std::move(flow.episodes),
                                  [paths](StepRecord s) { return tf::flatten_observation(std::move(s), paths); });
  } else if (op == "truncate_after_condition") {
    const auto field = param<std::string>(stage, "field");
    const Alignment alignment = flow.alignment;
    flow.episodes = tf::apply_episodes(std::move(flow.episodes), [field, alignment](EpisodeRecord e) {
      e.steps = tf::truncate_after_condition(Stream<StepRecord>::from_vector(std::move(e.steps)),
                                             [&field, alignment](const StepRecord& s) {
                                               if (!tf::selector_defined(s, field, alignment)) return false;
                                               const Tensor& t = tf::select_field(s, field);
                                               return t.size() > 0 && t.as_double(0) != 0.0;
                                             })
                    .collect();
      return e;
    });
  } else if (op == "concat_if_terminal") {
    const auto copies = param_or<std::uint32_t>(stage, "copies", 1);
    flow.episodes = tf::apply_episodes(std::move(flow.episodes), [copies](EpisodeRecord e) {
      return tf::concat_if_terminal(std::move(e), [copies](const StepRecord& last) {
        return Stream<StepRecord>::from_vector(std::vector<StepRecord>(copies, last));
      });
    });
  } else if (op == "pad_steps") {
    const auto count = param<std::uint32_t>(stage, "count");
    StepRecord padding = tf::empty_step(flow.schema);
    flow.episodes = tf::apply_episodes(std::move(flow.episodes), [count, padding](EpisodeRecord e) {
      e.steps = tf::pad_steps(Stream<StepRecord>::from_vector(std::move(e.steps)), count, padding).collect();
      return e;
    });
  } else if (op == "flatten") {
    flow.kind = StreamKind::step;
  } else if (op == "make_transitions") {
    if (flow.alignment != Alignment::sar) fail(ErrorCode::invalid_argument, "make_transitions needs SAR steps");
    flow.transitions = std::move(flow.episodes).flat_map([](EpisodeRecord e) { return tf::make_transitions(e); });
    flow.kind = StreamKind::transition;
  } else if (op == "batch_steps") {
    const auto size = param<std::uint32_t>(stage, "size");
    const auto shift = param_or<std::uint32_t>(stage, "shift", size);
    const bool drop = param_or<bool>(stage, "drop_remainder", true);
    if (size == 0 || shift == 0) fail(ErrorCode::invalid_argument, "batch_steps size and shift must be positive");
    flow.windows = std::move(flow.episodes).flat_map([size, shift, drop](EpisodeRecord e) {
      return tf::batch_steps(Stream<StepRecord>::from_vector(std::move(e.steps)), size, shift, drop);
    });
    flow.kind = StreamKind::window;
  }
}

Flow open_input(const PipelineInput& input, const fs::path& cache_dir) {
  Flow flow;
  if (!input.path.empty()) {
    auto reader = store::Reader::open(input.path);
    flow.schema = reader.schema();
    flow.episodes = reader.iter_episodes();
  } else {
    catalog::Catalog cat(input.catalog, cache_dir.empty() ? input.catalog / ".cache" : cache_dir);
    auto loaded = cat.load(input.dataset, input.split);
    flow.schema = std::move(loaded.schema);
    flow.episodes = std::move(loaded.episodes);
  }
  flow.alignment = alignment_of(flow.schema);
  return flow;
}

json stats_doc(const tf::FieldStatistics& s) {
  return json{{"count", s.count}, {"mean", s.mean}, {"std", s.std}, {"min", s.min}, {"max", s.max}};
}

}  // namespace

PipelineSpec parse_pipeline_spec(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) fail(ErrorCode::invalid_argument, "pipeline spec must be an object");
  if (doc.contains("v") && doc["v"] != 1) fail(ErrorCode::invalid_argument, "unsupported pipeline spec version");
  PipelineSpec spec;
  try {
    const json& in = doc.at("input");
    if (in.contains("path")) {
      spec.input.path = resolve(base_dir, in.at("path").get<std::string>());
    } else {
      spec.input.catalog = resolve(base_dir, in.at("catalog").get<std::string>());
      spec.input.dataset = in.at("dataset").get<std::string>();
      spec.input.split = in.value("split", std::string("train"));
    }
    for (const auto& s : doc.value("stages", json::array())) {
      PipelineStage stage;
      stage.op = s.at("op").get<std::string>();
      if (!op_table().count(stage.op)) fail(ErrorCode::invalid_argument, "unknown stage op '" + stage.op + "'");
      stage.params = s;
      stage.params.erase("op");
      spec.stages.push_back(std::move(stage));
    }
    const json& out = doc.at("output");
    if (out.contains("path")) {
      spec.output.path = resolve(base_dir, out.at("path").get<std::string>());
    } else {
      spec.output.report = out.at("report").get<std::string>();
      if (spec.output.report != "count" && spec.output.report != "stats" && spec.output.report != "histogram") {
        fail(ErrorCode::invalid_argument, "unknown report '" + spec.output.report + "'");
      }
      spec.output.field = out.value("field", std::string());
      spec.output.bins = out.value("bins", std::size_t{20});
      if (out.contains("range")) {
        auto r = out.at("range").get<std::vector<double>>();
        if (r.size() != 2 || !(r[0] < r[1])) fail(ErrorCode::invalid_argument, "range must be [lo, hi] with lo < hi");
        spec.output.range = std::make_pair(r[0], r[1]);
      }
      if (spec.output.report != "count" && spec.output.field.empty()) {
        fail(ErrorCode::invalid_argument, spec.output.report + " report needs a field");
      }
      if (spec.output.bins == 0) fail(ErrorCode::invalid_argument, "bins must be positive");
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::invalid_argument, std::string("malformed pipeline spec: ") + e.what());
  }
  return spec;
}

std::optional<KindMismatch> find_kind_mismatch(const PipelineSpec& spec) {
  StreamKind current = StreamKind::episode;
  for (std::size_t i = 0; i < spec.stages.size(); ++i) {
    const auto& kinds = op_table().at(spec.stages[i].op);
    if (kinds.in != current) return KindMismatch{i, kinds.in, current};
    current = kinds.out;
  }
  const std::size_t sink = spec.stages.size();
  if (!spec.output.path.empty() && current != StreamKind::episode) {
    return KindMismatch{sink, StreamKind::episode, current};
  }
  if (spec.output.report == "histogram" && spec.output.field == "return" && current != StreamKind::episode) {
    return KindMismatch{sink, StreamKind::episode, current};
  }
  if ((spec.output.report == "stats" || spec.output.report == "histogram") && current != StreamKind::episode &&
      current != StreamKind::step) {
    return KindMismatch{sink, StreamKind::step, current};
  }
  return std::nullopt;
}

std::vector<StreamKind> check_pipeline(const PipelineSpec& spec) {
  if (auto m = find_kind_mismatch(spec)) {
    const std::string what = m->stage < spec.stages.size() ? spec.stages[m->stage].op : std::string("output");
    fail(ErrorCode::pipeline_kind_mismatch,
         "stage " + std::to_string(m->stage) + " (" + what + ") expects " +
             std::string(stream_kind_name(m->expected)) + " input but receives " +
             std::string(stream_kind_name(m->actual)));
  }
  std::vector<StreamKind> kinds;
  for (const auto& s : spec.stages) kinds.push_back(op_table().at(s.op).out);
  return kinds;
}

json run_pipeline(const PipelineSpec& spec, const fs::path& cache_dir) {
  check_pipeline(spec);
  Flow flow = open_input(spec.input, cache_dir);
  for (const auto& stage : spec.stages) apply_stage(flow, stage);

  json report{{"v", 1}, {"kind", stream_kind_name(flow.kind)}};
  const auto& out = spec.output;
  if (!out.path.empty()) {
    store::Writer writer(out.path, flow.schema);
    for (auto& e : flow.episodes) {
      for (const auto& s : e.steps) writer.append_step(s);
      writer.end_episode(e.metadata);
    }
    auto summary = writer.finalize();
    report["report"] = "file";
    report["path"] = out.path.string();
    report["episodes"] = summary.episodes;
    report["steps"] = summary.steps;
    report["bytes"] = summary.bytes;
    return report;
  }
  report["report"] = out.report;
  if (out.report == "count") {
    std::uint64_t n = 0;
    switch (flow.kind) {
      case StreamKind::episode:
      case StreamKind::step: {
        std::uint64_t episodes = 0;
        for (auto& e : flow.episodes) {
          ++episodes;
          n += flow.kind == StreamKind::step ? e.steps.size() : 1;
        }
        report["episodes"] = episodes;
        break;
      }
      case StreamKind::transition:
        while (flow.transitions.next()) ++n;
        break;
      case StreamKind::window:
        while (flow.windows.next()) ++n;
        break;
    }
    report["count"] = n;
    return report;
  }
  report["field"] = out.field;
  if (out.report == "stats") {
    report["statistics"] = stats_doc(tf::field_statistics(std::move(flow.episodes), out.field, flow.alignment));
    return report;
  }
  std::vector<double> values;
  if (out.field == "return") {
    for (auto& e : flow.episodes) {
      values.push_back(tf::episode_return(Stream<StepRecord>::from_vector(std::move(e.steps)), {}, flow.alignment));
    }
  } else {
    for (auto& e : flow.episodes) {
      for (const auto& s : e.steps) {
        if (!tf::selector_defined(s, out.field, flow.alignment)) continue;
        const Tensor& t = tf::select_field(s, out.field);
        for (std::size_t i = 0; i < t.size(); ++i) values.push_back(t.as_double(i));
      }
    }
  }
  json bins = json::array();
  for (const auto& b : tf::histogram(values, out.bins, out.range)) {
    bins.push_back(json{{"bin_left", b.left}, {"bin_right", b.right}, {"count", b.count}});
  }
  report["values"] = values.size();
  report["bins"] = bins;
  return report;
}

}  // namespace epilogue::cli
