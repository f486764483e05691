#pragma once

#include <chrono>
#include <memory>
#include <string>

#include "epilogue/collect/studio.hpp"

namespace epilogue::collect {

struct ServerOptions {
  std::string host = "127.0.0.1";
  std::uint16_t port = 8080;  // 0 picks a free port
  std::chrono::milliseconds tick_interval{5};
  int threads = 2;
};

/// HTTP and websocket front end for a Studio on one port. Requests that ask
/// for a websocket upgrade become protocol connections; everything else is
/// routed to Studio::handle_http.
class Server {
 public:
  Server(Studio& studio, ServerOptions options);
  ~Server();

  // Binds and starts serving on background threads.
  void start();
  // Blocks until stop() is called from another thread or a signal handler.
  void wait();
  void stop();

  // Bound port, valid after start().
  std::uint16_t port() const;

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace epilogue::collect
