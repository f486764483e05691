#include "epilogue/collect/store.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <random>
#include <sstream>

#include "epilogue/collect/image.hpp"
#include "epilogue/core/validate.hpp"
#include "epilogue/store/reader.hpp"
#include "epilogue/store/writer.hpp"
#include "epilogue/transforms/windows.hpp"

namespace epilogue::collect {
namespace fs = std::filesystem;
using nlohmann::json;

std::string_view outcome_name(Outcome outcome) {
  switch (outcome) {
    case Outcome::completed: return "completed";
    case Outcome::canceled: return "canceled";
    case Outcome::abandoned: return "abandoned";
    case Outcome::rejected: return "rejected";
  }
  return "?";
}

std::optional<Outcome> parse_outcome(std::string_view name) {
  for (Outcome o : {Outcome::completed, Outcome::canceled, Outcome::abandoned, Outcome::rejected}) {
    if (outcome_name(o) == name) return o;
  }
  return std::nullopt;
}

json episode_info_to_json(const EpisodeInfo& info) {
  json episode_tags = json::object();
  for (const auto& [name, value] : info.episode_tags) {
    episode_tags[name] = std::holds_alternative<bool>(value) ? json(std::get<bool>(value))
                                                             : json(std::get<std::string>(value));
  }
  json step_tags = json::object();
  for (const auto& [name, steps] : info.step_tags) step_tags[name] = steps;
  return json{{"id", info.id},
              {"study_id", info.study_id},
              {"user_id", info.user_id},
              {"session_id", info.session_id},
              {"outcome", outcome_name(info.outcome)},
              {"env_index", info.env_index},
              {"num_steps", info.num_steps},
              {"persisted", info.persisted},
              {"rewards", info.rewards},
              {"tags", {{"episode", episode_tags}, {"steps", step_tags}}}};
}

EpisodeInfo episode_info_from_json(const json& doc) {
  try {
    EpisodeInfo info;
    info.id = doc.at("id").get<std::string>();
    info.study_id = doc.at("study_id").get<std::string>();
    info.user_id = doc.at("user_id").get<std::string>();
    info.session_id = doc.at("session_id").get<std::string>();
    auto outcome = parse_outcome(doc.at("outcome").get<std::string>());
    if (!outcome) fail(ErrorCode::invalid_argument, "unknown outcome");
    info.outcome = *outcome;
    info.env_index = doc.at("env_index").get<std::size_t>();
    info.num_steps = doc.at("num_steps").get<std::uint64_t>();
    info.persisted = doc.at("persisted").get<bool>();
    for (const auto& r : doc.at("rewards")) info.rewards.push_back(r.is_null() ? 0.0 : r.get<double>());
    for (const auto& [name, value] : doc.at("tags").at("episode").items()) {
      if (value.is_boolean()) {
        info.episode_tags[name] = value.get<bool>();
      } else {
        info.episode_tags[name] = value.get<std::string>();
      }
    }
    for (const auto& [name, steps] : doc.at("tags").at("steps").items()) {
      info.step_tags[name] = steps.get<std::set<std::uint64_t>>();
    }
    return info;
  } catch (const json::exception& e) {
    fail(ErrorCode::invalid_argument, std::string("malformed episode record: ") + e.what());
  }
}

FeatureSpec recorded_episode_metadata_spec() {
  return FeatureSpec{{"episode_id", scalar_spec(DType::bytes)},
                     {"outcome", scalar_spec(DType::bytes)},
                     {"study_id", scalar_spec(DType::bytes)},
                     {"user_id", scalar_spec(DType::bytes)}};
}

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  auto doc = json::parse(buf.str(), nullptr, false);
  if (doc.is_discarded()) fail(ErrorCode::io_failure, "unparseable " + path.string());
  return doc;
}

void write_json(const fs::path& path, const json& doc) {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  const fs::path tmp = path.parent_path() / (".tmp-" + std::to_string(rng()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << canonical_dump(doc) << "\n";
    if (!out.flush()) fail(ErrorCode::io_failure, "cannot write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::io_failure, "cannot write " + path.string() + ": " + ec.message());
}

std::uint64_t numeric_suffix(const std::string& id) {
  auto dash = id.rfind('-');
  if (dash == std::string::npos) return 0;
  try {
    return std::stoull(id.substr(dash + 1));
  } catch (const std::exception&) {
    return 0;
  }
}

std::string padded(const char* prefix, std::uint64_t n, int width) {
  std::ostringstream os;
  os << prefix << std::setw(width) << std::setfill('0') << n;
  return os.str();
}

// Removes image leaves (u8 [H, W, 3|4]) from a step metadata spec or value.
template <class Leaf, class IsImage>
Tree<Leaf> without_images(const Tree<Leaf>& tree, IsImage is_image_leaf) {
  if (tree.is_leaf()) return tree;
  Tree<Leaf> out;
  for (const auto& e : tree.children()) {
    if (e.value.is_leaf() && is_image_leaf(e.value.leaf())) continue;
    Tree<Leaf> child = without_images(e.value, is_image_leaf);
    if (!child.is_leaf() && child.children().empty()) continue;
    out.set(e.name, std::move(child));
  }
  return out;
}

}  // namespace

StudyStore::StudyStore(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_ / "studies", ec);
  if (ec) fail(ErrorCode::io_failure, "cannot create " + (root_ / "studies").string());
  for (const auto& dir : fs::directory_iterator(root_ / "studies")) {
    if (!fs::exists(dir.path() / "study.json")) continue;
    Study s = study_from_json(read_json(dir.path() / "study.json"));
    next_study_ = std::max(next_study_, numeric_suffix(s.id) + 1);
    const fs::path episodes = dir.path() / "episodes";
    if (fs::is_directory(episodes)) {
      for (const auto& f : fs::directory_iterator(episodes)) {
        if (f.path().extension() != ".json") continue;
        EpisodeInfo info = episode_info_from_json(read_json(f.path()));
        next_episode_ = std::max(next_episode_, numeric_suffix(info.id) + 1);
        episodes_[info.id] = std::move(info);
      }
    }
    studies_[s.id] = std::move(s);
  }
}

fs::path StudyStore::study_dir(const std::string& id) const { return root_ / "studies" / id; }

fs::path StudyStore::episode_path(const EpisodeInfo& info, const char* ext) const {
  return study_dir(info.study_id) / "episodes" / (info.id + ext);
}

void StudyStore::save_study(const Study& study) const {
  fs::create_directories(study_dir(study.id) / "episodes");
  write_json(study_dir(study.id) / "study.json", study_to_json(study));
}

void StudyStore::save_info(const EpisodeInfo& info) const {
  write_json(episode_path(info, ".json"), episode_info_to_json(info));
}

Study StudyStore::create_study(Study draft) {
  validate_study(draft);
  std::unique_lock lock(mu_);
  draft.id = padded("study-", next_study_++, 4);
  draft.state = StudyState::draft;
  save_study(draft);
  studies_[draft.id] = draft;
  return draft;
}

Study StudyStore::activate_study(const std::string& id) {
  std::unique_lock lock(mu_);
  auto it = studies_.find(id);
  if (it == studies_.end()) fail(ErrorCode::unknown_study, "no study '" + id + "'");
  if (it->second.state == StudyState::archived) {
    fail(ErrorCode::invalid_argument, "study '" + id + "' is archived");
  }
  if (it->second.state == StudyState::draft) {
    it->second.state = StudyState::active;
    save_study(it->second);
  }
  return it->second;
}

Study StudyStore::archive_study(const std::string& id) {
  std::unique_lock lock(mu_);
  auto it = studies_.find(id);
  if (it == studies_.end()) fail(ErrorCode::unknown_study, "no study '" + id + "'");
  it->second.state = StudyState::archived;
  save_study(it->second);
  return it->second;
}

std::vector<Study> StudyStore::studies() const {
  std::shared_lock lock(mu_);
  std::vector<Study> out;
  for (const auto& [id, s] : studies_) out.push_back(s);
  return out;
}

Study StudyStore::study(const std::string& id) const {
  std::shared_lock lock(mu_);
  auto it = studies_.find(id);
  if (it == studies_.end()) fail(ErrorCode::unknown_study, "no study '" + id + "'");
  return it->second;
}

std::string StudyStore::next_episode_id() {
  std::unique_lock lock(mu_);
  return padded("ep-", next_episode_++, 6);
}

EpisodeInfo StudyStore::add_episode(EpisodeInfo info, const EpisodeRecord& episode, const DatasetSchema& schema) {
  std::unique_lock lock(mu_);
  if (!studies_.count(info.study_id)) fail(ErrorCode::unknown_study, "no study '" + info.study_id + "'");
  info.rewards.clear();
  for (const auto& s : episode.steps) {
    info.rewards.push_back(s.reward.is_leaf() && s.reward.leaf().size() > 0 ? s.reward.leaf().as_double(0) : 0.0);
  }
  info.num_steps = episode.steps.size();
  info.persisted = info.outcome != Outcome::rejected;
  if (info.persisted) {
    auto report = validate_episode(episode, schema, Alignment::sar);
    if (!report.ok()) fail(ErrorCode::invalid_episode, report.to_string());
    const fs::path path = episode_path(info, ".rlds");
    fs::create_directories(path.parent_path());
    store::Writer writer(path, schema);
    for (const auto& s : episode.steps) writer.append_step(s);
    writer.end_episode(episode.metadata);
    writer.finalize();
  } else {
    info.rewards.clear();
    info.num_steps = 0;
  }
  save_info(info);
  episodes_[info.id] = info;
  return info;
}

std::vector<EpisodeInfo> StudyStore::episodes(const std::string& study_id) const {
  std::shared_lock lock(mu_);
  if (!studies_.count(study_id)) fail(ErrorCode::unknown_study, "no study '" + study_id + "'");
  std::vector<EpisodeInfo> out;
  for (const auto& [id, info] : episodes_) {
    if (info.study_id == study_id) out.push_back(info);
  }
  return out;
}

const EpisodeInfo& StudyStore::find_episode(const std::string& id) const {
  auto it = episodes_.find(id);
  if (it == episodes_.end()) fail(ErrorCode::unknown_episode, "no episode '" + id + "'");
  return it->second;
}

EpisodeInfo StudyStore::episode(const std::string& episode_id) const {
  std::shared_lock lock(mu_);
  return find_episode(episode_id);
}

EpisodeRecord StudyStore::load_episode(const std::string& episode_id) const {
  std::shared_lock lock(mu_);
  const auto& info = find_episode(episode_id);
  if (!info.persisted) fail(ErrorCode::unknown_episode, "episode '" + episode_id + "' was discarded");
  return store::Reader::open(episode_path(info, ".rlds")).get_episode(0);
}

DatasetSchema StudyStore::episode_schema(const std::string& episode_id) const {
  std::shared_lock lock(mu_);
  const auto& info = find_episode(episode_id);
  if (!info.persisted) fail(ErrorCode::unknown_episode, "episode '" + episode_id + "' was discarded");
  return store::Reader::open(episode_path(info, ".rlds")).schema();
}

StepRecord StudyStore::step(const std::string& episode_id, std::uint64_t index) const {
  std::shared_lock lock(mu_);
  const auto& info = find_episode(episode_id);
  if (!info.persisted) fail(ErrorCode::unknown_episode, "episode '" + episode_id + "' was discarded");
  if (index >= info.num_steps) {
    fail(ErrorCode::index_out_of_range,
         "step " + std::to_string(index) + " of a " + std::to_string(info.num_steps) + "-step episode");
  }
  return store::Reader::open(episode_path(info, ".rlds")).get_step(0, index);
}

EpisodeInfo StudyStore::tag(const std::string& episode_id, TagScope scope, std::optional<std::uint64_t> step,
                            const std::string& name, const TagValue& value) {
  if (name.empty() || name.find('/') != std::string::npos) {
    fail(ErrorCode::invalid_argument, "tag names must be non-empty and contain no '/'");
  }
  std::unique_lock lock(mu_);
  auto it = episodes_.find(episode_id);
  if (it == episodes_.end()) fail(ErrorCode::unknown_episode, "no episode '" + episode_id + "'");
  EpisodeInfo& info = it->second;
  if (scope == TagScope::episode) {
    info.episode_tags[name] = value;
  } else {
    if (!step) fail(ErrorCode::invalid_argument, "step tags need a step index");
    if (*step >= info.num_steps) {
      fail(ErrorCode::index_out_of_range,
           "step " + std::to_string(*step) + " of a " + std::to_string(info.num_steps) + "-step episode");
    }
    if (!std::holds_alternative<bool>(value)) fail(ErrorCode::invalid_argument, "step tags are bool");
    auto& steps = info.step_tags[name];
    if (std::get<bool>(value)) {
      steps.insert(*step);
    } else {
      steps.erase(*step);
      if (steps.empty()) info.step_tags.erase(name);
    }
  }
  save_info(info);
  return info;
}

ExportSummary StudyStore::export_episodes(const std::string& study_id, const ExportRequest& request,
                                          const fs::path& out) const {
  std::shared_lock lock(mu_);
  if (!studies_.count(study_id)) fail(ErrorCode::unknown_study, "no study '" + study_id + "'");
  std::vector<const EpisodeInfo*> selected;
  for (const auto& [id, info] : episodes_) {
    if (info.study_id != study_id || !info.persisted) continue;
    if (std::find(request.outcomes.begin(), request.outcomes.end(), info.outcome) == request.outcomes.end()) continue;
    if (!request.episode_ids.empty() &&
        std::find(request.episode_ids.begin(), request.episode_ids.end(), id) == request.episode_ids.end()) {
      continue;
    }
    selected.push_back(&info);
  }
  if (selected.empty()) fail(ErrorCode::no_matching_episodes, "no episodes of " + study_id + " match the filter");

  std::optional<DatasetSchema> base;
  std::set<std::string> step_tag_names;
  std::map<std::string, bool> episode_tag_is_text;
  for (const EpisodeInfo* info : selected) {
    auto schema = store::Reader::open(episode_path(*info, ".rlds")).schema();
    if (base && !(*base == schema)) {
      fail(ErrorCode::schema_mismatch, "episode " + info->id + " was recorded with a different schema");
    }
    base = schema;
    for (const auto& [name, steps] : info->step_tags) step_tag_names.insert(name);
    for (const auto& [name, value] : info->episode_tags) {
      episode_tag_is_text[name] = episode_tag_is_text[name] || std::holds_alternative<std::string>(value);
    }
  }
  if (request.truncate_on_tag) step_tag_names.insert(*request.truncate_on_tag);

  DatasetSchema schema = *base;
  if (request.strip_images) {
    schema.step_metadata = without_images(schema.step_metadata, [](const LeafSpec& l) { return is_image_spec(l); });
  }
  for (const auto& name : step_tag_names) schema.step_metadata.set("tag:" + name, scalar_spec(DType::boolean));
  for (const auto& [name, text] : episode_tag_is_text) {
    schema.episode_metadata.set("tag:" + name, scalar_spec(text ? DType::bytes : DType::boolean));
  }

  ExportSummary summary;
  {
    store::Writer writer(out, schema);
    for (const EpisodeInfo* info : selected) {
      EpisodeRecord episode = store::Reader::open(episode_path(*info, ".rlds")).get_episode(0);
      for (std::size_t i = 0; i < episode.steps.size(); ++i) {
        auto& step = episode.steps[i];
        if (request.strip_images) {
          step.metadata = without_images(step.metadata, [](const Tensor& t) { return is_image(t); });
        }
        for (const auto& name : step_tag_names) {
          auto tags = info->step_tags.find(name);
          const bool set = tags != info->step_tags.end() && tags->second.count(i) > 0;
          step.metadata.set("tag:" + name, Nested(Tensor::scalar(set)));
        }
      }
      for (const auto& [name, text] : episode_tag_is_text) {
        auto tag = info->episode_tags.find(name);
        if (text) {
          std::string v;
          if (tag != info->episode_tags.end()) {
            v = std::holds_alternative<bool>(tag->second) ? (std::get<bool>(tag->second) ? "true" : "false")
                                                          : std::get<std::string>(tag->second);
          }
          episode.metadata.set("tag:" + name, Nested(Tensor::string(v)));
        } else {
          const bool v = tag != info->episode_tags.end() && std::get<bool>(tag->second);
          episode.metadata.set("tag:" + name, Nested(Tensor::scalar(v)));
        }
      }
      if (request.truncate_on_tag) {
        const std::string key = "tag:" + *request.truncate_on_tag;
        const std::size_t before = episode.steps.size();
        episode.steps = transforms::truncate_after_condition(
                            Stream<StepRecord>::from_vector(std::move(episode.steps)),
                            [&key](const StepRecord& s) { return s.metadata.find(key)->leaf().as_double(0) != 0; })
                            .collect();
        if (episode.steps.size() < before) {
          // The cut step closes the episode like a time limit would.
          auto& last = episode.steps.back();
          last.is_last = true;
          last.is_terminal = false;
          last.action = undefined_fill(schema.action);
          last.reward = undefined_fill(schema.reward);
          last.discount = undefined_fill(schema.discount);
        }
      }
      for (const auto& s : episode.steps) writer.append_step(s);
      writer.end_episode(episode.metadata);
      summary.episodes += 1;
      summary.steps += episode.steps.size();
    }
    summary.bytes = writer.finalize().bytes;
  }
  return summary;
}

}  // namespace epilogue::collect
