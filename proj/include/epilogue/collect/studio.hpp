#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "epilogue/collect/session.hpp"

namespace epilogue::collect {

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

// HTTP status for an error code: unknown ids 404, bad input 400, state
// conflicts 409, empty exports 422, everything else 500.
int http_status(ErrorCode code);

/// Protocol core shared by every transport. Connections carry one session
/// each; a session outlives its connection for the study's pause timeout so
/// a client can reconnect with {"type":"start_session","resume":<id>}.
///
/// Client documents: start_session{study, user, resume?}, select_env{index},
/// start_episode, action{value}, pause, unpause, cancel, save{confirm},
/// tag{scope, name, step?, value?, episode?}, end_session.
/// Server documents: session, frame, episode_end, state, tagged, error.
/// Every document carries "v": 1.
///
/// HTTP:
///   GET  /studies                       list
///   POST /studies                       create a draft from a study document
///   GET  /studies/{id}
///   POST /studies/{id}/activate
///   POST /studies/{id}/archive
///   GET  /studies/{id}/episodes         episode records
///   GET  /episodes/{id}                 record with the per-step reward array
///   GET  /episodes/{id}/steps/{j}       step fields; image as recorded PNG
///   POST /episodes/{id}/tags            {scope, name, step?, value?}
///   POST /export                        {study, outcomes?, episode_ids?,
///                                        strip_images?, truncate_on_tag?}
///                                       -> .rlds bytes
class Studio {
 public:
  using ConnectionId = std::uint64_t;

  Studio(StudyStore& store, const Clock& clock);
  ~Studio();

  ConnectionId connect();
  // Replies for the sender. Malformed documents yield an error reply.
  std::vector<nlohmann::json> on_message(ConnectionId conn, std::string_view text);
  // Pauses a running episode and starts the reconnection window.
  void disconnect(ConnectionId conn);
  // Async steps, pause timeouts and expiry of detached sessions. Messages
  // are addressed to the session's current connection.
  std::vector<std::pair<ConnectionId, nlohmann::json>> tick();

  HttpResponse handle_http(std::string_view method, std::string_view target, std::string_view body);

  std::size_t session_count() const;
  StudyStore& store() { return *store_; }

 private:
  struct Slot;

  std::vector<nlohmann::json> dispatch(ConnectionId conn, const nlohmann::json& doc);
  std::vector<nlohmann::json> start_session(ConnectionId conn, const nlohmann::json& doc);
  std::vector<nlohmann::json> tag(Slot* slot, const nlohmann::json& doc);
  std::shared_ptr<Slot> slot_for(ConnectionId conn) const;

  StudyStore* store_;
  const Clock* clock_;
  mutable std::mutex mu_;
  std::map<ConnectionId, std::string> attached_;  // connection -> session id
  std::map<std::string, std::shared_ptr<Slot>> sessions_;
  ConnectionId next_connection_ = 1;
  std::uint64_t next_session_ = 1;
  std::uint64_t next_export_ = 1;
};

}  // namespace epilogue::collect
