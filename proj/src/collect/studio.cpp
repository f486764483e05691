#include "epilogue/collect/studio.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

#include "epilogue/codec/digest.hpp"
#include "epilogue/collect/image.hpp"

namespace epilogue::collect {
using nlohmann::json;

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::unknown_study:
    case ErrorCode::unknown_episode:
    case ErrorCode::unknown_session:
    case ErrorCode::index_out_of_range:
      return 404;
    case ErrorCode::invalid_argument:
    case ErrorCode::invalid_schema:
    case ErrorCode::unknown_field:
      return 400;
    case ErrorCode::illegal_event:
    case ErrorCode::study_not_active:
    case ErrorCode::schema_mismatch:
      return 409;
    case ErrorCode::no_matching_episodes:
      return 422;
    default:
      return 500;
  }
}

struct Studio::Slot {
  std::mutex mu;
  std::unique_ptr<Session> session;
  std::optional<ConnectionId> conn;
  // Set while no connection is attached.
  std::optional<Clock::time_point> detached_deadline;
};

namespace {

json error_doc(std::string_view code, const std::string& message) {
  return json{{"v", 1}, {"type", "error"}, {"code", code}, {"message", message}};
}

json error_doc(const Error& e) { return error_doc(error_code_name(e.code()), e.what()); }

HttpResponse json_response(int status, const json& doc) { return HttpResponse{status, "application/json", doc.dump()}; }

HttpResponse error_response(const Error& e) {
  return json_response(http_status(e.code()),
                       json{{"v", 1}, {"error", {{"code", error_code_name(e.code())}, {"message", e.what()}}}});
}

std::vector<std::string> split_path(std::string_view target) {
  target = target.substr(0, target.find('?'));
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (pos < target.size()) {
    auto next = target.find('/', pos);
    if (next == std::string_view::npos) next = target.size();
    if (next > pos) parts.emplace_back(target.substr(pos, next - pos));
    pos = next + 1;
  }
  return parts;
}

json parse_body(std::string_view body) {
  if (body.empty()) return json::object();
  auto doc = json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) fail(ErrorCode::invalid_argument, "body must be a JSON object");
  return doc;
}

std::uint64_t parse_index(const std::string& text) {
  if (text.empty() || text.size() > 19 || text.find_first_not_of("0123456789") != std::string::npos) {
    fail(ErrorCode::invalid_argument, "bad step index '" + text + "'");
  }
  return std::stoull(text);
}

template <class T>
T get_field(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) fail(ErrorCode::invalid_argument, std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::invalid_argument, std::string("bad field '") + key + "'");
  }
}

TagValue tag_value(const json& doc) {
  auto it = doc.find("value");
  if (it == doc.end()) return true;
  if (it->is_boolean()) return it->get<bool>();
  if (it->is_string()) return it->get<std::string>();
  fail(ErrorCode::invalid_argument, "tag value must be bool or text");
}

TagScope tag_scope(const json& doc) {
  const auto scope = get_field<std::string>(doc, "scope");
  if (scope == "episode") return TagScope::episode;
  if (scope == "step") return TagScope::step;
  fail(ErrorCode::invalid_argument, "tag scope must be episode or step");
}

std::optional<std::uint64_t> tag_step(const json& doc) {
  if (!doc.contains("step") || doc["step"].is_null()) return std::nullopt;
  return get_field<std::uint64_t>(doc, "step");
}

json info_doc(const EpisodeInfo& info) {
  json doc = episode_info_to_json(info);
  doc["v"] = 1;
  return doc;
}

json study_doc(const Study& study) {
  json doc = study_to_json(study);
  doc["v"] = 1;
  return doc;
}

std::optional<EventKind> simple_event(const std::string& type) {
  if (type == "start_episode") return EventKind::start_episode;
  if (type == "pause") return EventKind::pause;
  if (type == "unpause") return EventKind::unpause;
  if (type == "cancel") return EventKind::cancel;
  if (type == "end_session") return EventKind::end_session;
  if (type == "episode_end") return EventKind::episode_end;
  return std::nullopt;
}

}  // namespace

Studio::Studio(StudyStore& store, const Clock& clock) : store_(&store), clock_(&clock) {}

Studio::~Studio() = default;

Studio::ConnectionId Studio::connect() {
  std::lock_guard lock(mu_);
  return next_connection_++;
}

std::size_t Studio::session_count() const {
  std::lock_guard lock(mu_);
  return sessions_.size();
}

std::shared_ptr<Studio::Slot> Studio::slot_for(ConnectionId conn) const {
  std::lock_guard lock(mu_);
  auto it = attached_.find(conn);
  if (it == attached_.end()) return nullptr;
  auto s = sessions_.find(it->second);
  return s == sessions_.end() ? nullptr : s->second;
}

std::vector<json> Studio::on_message(ConnectionId conn, std::string_view text) {
  auto doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("type") || !doc["type"].is_string()) {
    return {error_doc("INVALID_ARGUMENT", "expected a JSON object with a string \"type\"")};
  }
  if (doc.contains("v") && doc["v"] != 1) return {error_doc("INVALID_ARGUMENT", "unsupported protocol version")};
  try {
    return dispatch(conn, doc);
  } catch (const Error& e) {
    return {error_doc(e)};
  } catch (const std::exception& e) {
    return {error_doc("INVALID_ARGUMENT", e.what())};
  }
}

std::vector<json> Studio::dispatch(ConnectionId conn, const json& doc) {
  const auto type = doc["type"].get<std::string>();
  if (type == "start_session") return start_session(conn, doc);

  auto slot = slot_for(conn);
  if (!slot) fail(ErrorCode::unknown_session, "no session on this connection; send start_session first");
  std::lock_guard lock(slot->mu);
  Session& session = *slot->session;
  if (type == "tag") return tag(slot.get(), doc);
  if (type == "action") {
    if (!doc.contains("value")) fail(ErrorCode::invalid_argument, "action needs a value");
    return session.apply(Event::action(doc["value"]));
  }
  if (type == "save") return session.apply(Event::save(get_field<bool>(doc, "confirm")));
  if (type == "select_env") return session.apply(Event::select_env(get_field<std::size_t>(doc, "index")));
  if (auto kind = simple_event(type)) return session.apply(Event::of(*kind));
  fail(ErrorCode::invalid_argument, "unknown message type '" + type + "'");
}

std::vector<json> Studio::start_session(ConnectionId conn, const json& doc) {
  std::shared_ptr<Slot> slot;
  {
    std::lock_guard lock(mu_);
    auto current = attached_.find(conn);
    if (current != attached_.end()) {
      auto s = sessions_.find(current->second);
      if (s != sessions_.end()) {
        std::lock_guard slot_lock(s->second->mu);
        if (s->second->session->phase() != Phase::ended) {
          fail(ErrorCode::illegal_event, "this connection already has a live session");
        }
        sessions_.erase(s);
      }
      attached_.erase(current);
    }

    if (doc.contains("resume") && !doc["resume"].is_null()) {
      const auto id = get_field<std::string>(doc, "resume");
      auto s = sessions_.find(id);
      if (s == sessions_.end()) fail(ErrorCode::unknown_session, "no session '" + id + "'");
      slot = s->second;
      std::lock_guard slot_lock(slot->mu);
      if (doc.contains("user") && doc["user"] != slot->session->user_id()) {
        fail(ErrorCode::unknown_session, "session '" + id + "' belongs to another user");
      }
      if (slot->conn) attached_.erase(*slot->conn);
      slot->conn = conn;
      slot->detached_deadline.reset();
      attached_[conn] = id;
    } else {
      const auto study_id = get_field<std::string>(doc, "study");
      const auto user = get_field<std::string>(doc, "user");
      Study study = store_->study(study_id);
      const std::uint64_t n = next_session_++;
      const std::string id = "sess-" + std::to_string(n);
      slot = std::make_shared<Slot>();
      slot->session = std::make_unique<Session>(id, user, std::move(study), *store_, *clock_, n);
      slot->conn = conn;
      sessions_[id] = slot;
      attached_[conn] = id;
    }
  }
  std::lock_guard slot_lock(slot->mu);
  const Session& session = *slot->session;
  json hello{{"v", 1},
             {"type", "session"},
             {"session", session.id()},
             {"user", session.user_id()},
             {"study", study_to_json(session.study())}};
  return {hello, session.state_message()};
}

std::vector<json> Studio::tag(Slot* slot, const json& doc) {
  const Session& session = *slot->session;
  std::string episode = session.episode_id();
  if (doc.contains("episode") && !doc["episode"].is_null()) episode = get_field<std::string>(doc, "episode");
  if (episode.empty()) fail(ErrorCode::unknown_episode, "no episode to tag yet");
  EpisodeInfo info = store_->episode(episode);
  if (info.study_id != session.study().id) fail(ErrorCode::unknown_episode, "episode is not part of this study");
  info = store_->tag(episode, tag_scope(doc), tag_step(doc), get_field<std::string>(doc, "name"), tag_value(doc));
  json reply = info_doc(info);
  reply["type"] = "tagged";
  return {reply};
}

void Studio::disconnect(ConnectionId conn) {
  std::shared_ptr<Slot> slot;
  {
    std::lock_guard lock(mu_);
    auto it = attached_.find(conn);
    if (it == attached_.end()) return;
    auto s = sessions_.find(it->second);
    attached_.erase(it);
    if (s == sessions_.end()) return;
    slot = s->second;
    std::lock_guard slot_lock(slot->mu);
    if (slot->session->phase() == Phase::ended) {
      sessions_.erase(s);
      return;
    }
  }
  std::lock_guard slot_lock(slot->mu);
  slot->conn.reset();
  Session& session = *slot->session;
  if (session.phase() == Phase::running) session.apply(Event::of(EventKind::pause));
  slot->detached_deadline = clock_->now() + std::chrono::seconds(session.study().pause_timeout_s);
}

std::vector<std::pair<Studio::ConnectionId, json>> Studio::tick() {
  std::vector<std::pair<std::string, std::shared_ptr<Slot>>> slots;
  {
    std::lock_guard lock(mu_);
    slots.assign(sessions_.begin(), sessions_.end());
  }
  std::vector<std::pair<ConnectionId, json>> out;
  std::vector<std::string> finished;
  for (auto& [id, slot] : slots) {
    std::lock_guard slot_lock(slot->mu);
    Session& session = *slot->session;
    std::vector<json> messages;
    try {
      messages = session.tick();
      if (!slot->conn && slot->detached_deadline && clock_->now() >= *slot->detached_deadline &&
          session.phase() != Phase::ended) {
        auto more = session.apply(Event::of(EventKind::end_session));
        messages.insert(messages.end(), more.begin(), more.end());
      }
    } catch (const Error& e) {
      messages.push_back(error_doc(e));
    }
    if (slot->conn) {
      for (auto& m : messages) out.emplace_back(*slot->conn, std::move(m));
    } else if (session.phase() == Phase::ended) {
      finished.push_back(id);
    }
  }
  if (!finished.empty()) {
    std::lock_guard lock(mu_);
    for (const auto& id : finished) {
      auto s = sessions_.find(id);
      if (s != sessions_.end() && !s->second->conn) sessions_.erase(s);
    }
  }
  return out;
}

HttpResponse Studio::handle_http(std::string_view method, std::string_view target, std::string_view body) {
  const auto parts = split_path(target);
  const auto n = parts.size();
  const bool get = method == "GET";
  const bool post = method == "POST";
  try {
    if (n >= 1 && parts[0] == "studies") {
      if (n == 1 && get) {
        json list = json::array();
        for (const auto& s : store_->studies()) list.push_back(study_to_json(s));
        return json_response(200, json{{"v", 1}, {"studies", list}});
      }
      if (n == 1 && post) {
        Study draft = study_from_json(parse_body(body));
        return json_response(201, study_doc(store_->create_study(std::move(draft))));
      }
      if (n == 2 && get) return json_response(200, study_doc(store_->study(parts[1])));
      if (n == 3 && post && parts[2] == "activate") return json_response(200, study_doc(store_->activate_study(parts[1])));
      if (n == 3 && post && parts[2] == "archive") return json_response(200, study_doc(store_->archive_study(parts[1])));
      if (n == 3 && get && parts[2] == "episodes") {
        json list = json::array();
        for (const auto& e : store_->episodes(parts[1])) list.push_back(episode_info_to_json(e));
        return json_response(200, json{{"v", 1}, {"study", parts[1]}, {"episodes", list}});
      }
    }
    if (n >= 2 && parts[0] == "episodes") {
      const std::string& id = parts[1];
      if (n == 2 && get) return json_response(200, info_doc(store_->episode(id)));
      if (n == 4 && get && parts[2] == "steps") {
        const std::uint64_t j = parse_index(parts[3]);
        const EpisodeInfo info = store_->episode(id);
        StepRecord step = store_->step(id, j);
        // The frame goes out once, as PNG, instead of as a number list.
        std::optional<Tensor> image;
        if (const Nested* leaf = step.metadata.find("image"); leaf && leaf->is_leaf() && is_image(leaf->leaf())) {
          image = leaf->leaf();
          step.metadata.erase("image");
        }
        json tags = json::array();
        for (const auto& [name, steps] : info.step_tags) {
          if (steps.count(j)) tags.push_back(name);
        }
        json doc{{"v", 1},
                 {"episode", id},
                 {"step", j},
                 {"num_steps", info.num_steps},
                 {"is_first", step.is_first},
                 {"is_last", step.is_last},
                 {"is_terminal", step.is_terminal},
                 {"observation", nested_to_json(step.observation)},
                 {"action", nested_to_json(step.action)},
                 {"reward", nested_to_json(step.reward)},
                 {"discount", nested_to_json(step.discount)},
                 {"metadata", nested_to_json(step.metadata)},
                 {"tags", tags}};
        if (image) doc["image"] = codec::base64_encode(encode_png(*image));
        return json_response(200, doc);
      }
      if (n == 3 && post && parts[2] == "tags") {
        const json req = parse_body(body);
        return json_response(200, info_doc(store_->tag(id, tag_scope(req), tag_step(req),
                                                        get_field<std::string>(req, "name"), tag_value(req))));
      }
    }
    if (n == 1 && parts[0] == "export" && post) {
      const json req = parse_body(body);
      ExportRequest request;
      if (req.contains("outcomes")) {
        request.outcomes.clear();
        for (const auto& o : req["outcomes"]) {
          auto outcome = o.is_string() ? parse_outcome(o.get<std::string>()) : std::nullopt;
          if (!outcome) fail(ErrorCode::invalid_argument, "unknown outcome " + o.dump());
          request.outcomes.push_back(*outcome);
        }
      }
      if (req.contains("episode_ids")) request.episode_ids = get_field<std::vector<std::string>>(req, "episode_ids");
      if (req.contains("strip_images")) request.strip_images = get_field<bool>(req, "strip_images");
      if (req.contains("truncate_on_tag") && !req["truncate_on_tag"].is_null()) {
        request.truncate_on_tag = get_field<std::string>(req, "truncate_on_tag");
      }
      const std::string study = get_field<std::string>(req, "study");
      const auto dir = store_->root() / "exports";
      std::filesystem::create_directories(dir);
      std::filesystem::path path;
      {
        std::lock_guard lock(mu_);
        path = dir / ("export-" + std::to_string(next_export_++) + ".rlds");
      }
      struct Cleanup {
        std::filesystem::path p;
        ~Cleanup() {
          std::error_code ec;
          std::filesystem::remove(p, ec);
        }
      } cleanup{path};
      store_->export_episodes(study, request, path);
      std::ifstream in(path, std::ios::binary);
      std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
      return HttpResponse{200, "application/octet-stream", std::move(bytes)};
    }
    return json_response(404, json{{"v", 1}, {"error", {{"code", "NOT_FOUND"}, {"message", std::string(target)}}}});
  } catch (const Error& e) {
    return error_response(e);
  } catch (const std::exception& e) {
    return json_response(500, json{{"v", 1}, {"error", {{"code", "INTERNAL"}, {"message", e.what()}}}});
  }
}

}  // namespace epilogue::collect
