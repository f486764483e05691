#include "epilogue/collect/server.hpp"

#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

namespace epilogue::collect {
namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using nlohmann::json;

class WsConnection;

struct Server::Impl {
  Studio* studio;
  ServerOptions options;
  asio::io_context io;
  tcp::acceptor acceptor{io};
  asio::steady_timer timer{io};
  std::vector<std::thread> threads;
  std::mutex mu;
  std::map<Studio::ConnectionId, std::weak_ptr<WsConnection>> connections;
  std::uint16_t bound_port = 0;
  bool stopped = false;
  std::mutex stop_mu;
  std::condition_variable stop_cv;

  void accept();
  void schedule_tick();
  void deliver(Studio::ConnectionId conn, json message);
};

class WsConnection : public std::enable_shared_from_this<WsConnection> {
 public:
  WsConnection(Server::Impl& server, tcp::socket socket) : server_(server), ws_(std::move(socket)) {}

  template <class Request>
  void start(Request req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, beast::bind_front_handler(&WsConnection::on_accept, shared_from_this()));
  }

  // Thread-safe: queued onto the connection's executor.
  void send(json message) {
    asio::post(ws_.get_executor(), [self = shared_from_this(), text = message.dump()]() mutable {
      self->queue_.push_back(std::move(text));
      if (self->queue_.size() == 1) self->write_next();
    });
  }

  Studio::ConnectionId id() const { return id_; }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    id_ = server_.studio->connect();
    {
      std::lock_guard lock(server_.mu);
      server_.connections[id_] = weak_from_this();
    }
    read();
  }

  void read() {
    ws_.async_read(buffer_, beast::bind_front_handler(&WsConnection::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      close();
      return;
    }
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    for (auto& reply : server_.studio->on_message(id_, text)) send(std::move(reply));
    read();
  }

  void write_next() {
    ws_.text(true);
    ws_.async_write(asio::buffer(queue_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      self->queue_.pop_front();
                      if (ec) return;
                      if (!self->queue_.empty()) self->write_next();
                    });
  }

  void close() {
    if (closed_) return;
    closed_ = true;
    {
      std::lock_guard lock(server_.mu);
      server_.connections.erase(id_);
    }
    server_.studio->disconnect(id_);
  }

  Server::Impl& server_;
  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
  Studio::ConnectionId id_ = 0;
  bool closed_ = false;
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
 public:
  HttpConnection(Server::Impl& server, tcp::socket socket) : server_(server), stream_(std::move(socket)) {}

  void start() { read(); }

 private:
  void read() {
    req_ = {};
    parser_.emplace();
    parser_->body_limit(64 * 1024 * 1024);
    stream_.expires_after(std::chrono::seconds(60));
    http::async_read(stream_, buffer_, *parser_,
                     beast::bind_front_handler(&HttpConnection::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      beast::error_code ignored;
      stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
      return;
    }
    req_ = parser_->release();
    if (websocket::is_upgrade(req_)) {
      stream_.expires_never();
      std::make_shared<WsConnection>(server_, stream_.release_socket())->start(std::move(req_));
      return;
    }
    HttpResponse out = server_.studio->handle_http(std::string(req_.method_string()), std::string(req_.target()),
                                                   req_.body());
    auto res = std::make_shared<http::response<http::string_body>>(static_cast<http::status>(out.status),
                                                                     req_.version());
    res->set(http::field::content_type, out.content_type);
    res->set(http::field::access_control_allow_origin, "*");
    res->keep_alive(req_.keep_alive());
    res->body() = std::move(out.body);
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (!res->keep_alive()) {
        beast::error_code ignored;
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
        return;
      }
      self->read();
    });
  }

  Server::Impl& server_;
  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  std::optional<http::request_parser<http::string_body>> parser_;
  http::request<http::string_body> req_;
};

void Server::Impl::accept() {
  acceptor.async_accept(asio::make_strand(io), [this](beast::error_code ec, tcp::socket socket) {
    if (ec == asio::error::operation_aborted) return;
    if (!ec) std::make_shared<HttpConnection>(*this, std::move(socket))->start();
    accept();
  });
}

void Server::Impl::deliver(Studio::ConnectionId conn, json message) {
  std::shared_ptr<WsConnection> target;
  {
    std::lock_guard lock(mu);
    auto it = connections.find(conn);
    if (it != connections.end()) target = it->second.lock();
  }
  if (target) target->send(std::move(message));
}

void Server::Impl::schedule_tick() {
  timer.expires_after(options.tick_interval);
  timer.async_wait([this](beast::error_code ec) {
    if (ec) return;
    for (auto& [conn, message] : studio->tick()) deliver(conn, std::move(message));
    schedule_tick();
  });
}

Server::Server(Studio& studio, ServerOptions options) : impl_(std::make_unique<Impl>()) {
  impl_->studio = &studio;
  impl_->options = std::move(options);
}

Server::~Server() { stop(); }

void Server::start() {
  auto& s = *impl_;
  tcp::endpoint endpoint(asio::ip::make_address(s.options.host), s.options.port);
  s.acceptor.open(endpoint.protocol());
  s.acceptor.set_option(asio::socket_base::reuse_address(true));
  s.acceptor.bind(endpoint);
  s.acceptor.listen(asio::socket_base::max_listen_connections);
  s.bound_port = s.acceptor.local_endpoint().port();
  s.accept();
  s.schedule_tick();
  for (int i = 0; i < std::max(1, s.options.threads); ++i) s.threads.emplace_back([&s] { s.io.run(); });
}

void Server::wait() {
  std::unique_lock lock(impl_->stop_mu);
  impl_->stop_cv.wait(lock, [this] { return impl_->stopped; });
}

void Server::stop() {
  auto& s = *impl_;
  {
    std::lock_guard lock(s.stop_mu);
    if (s.stopped && s.threads.empty()) return;
    s.stopped = true;
  }
  s.stop_cv.notify_all();
  s.io.stop();
  for (auto& t : s.threads) {
    if (t.joinable() && t.get_id() != std::this_thread::get_id()) t.join();
  }
  s.threads.clear();
}

std::uint16_t Server::port() const { return impl_->bound_port; }

}  // namespace epilogue::collect
