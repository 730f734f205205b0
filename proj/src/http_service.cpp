#include "oba/http_service.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <atomic>
#include <deque>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>
#include <vector>

#include "oba/error.hpp"
#include "oba/player_protocol.hpp"
#include "oba/scene_json.hpp"

namespace oba {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using nlohmann::json;

namespace {

constexpr std::string_view kPlaceholderPage = R"html(<!doctype html>
<html lang="en">
<head><meta charset="utf-8"><title>Object audio player</title></head>
<body>
<h1>Object audio player</h1>
<p>No user interface directory was given. The control API is available:</p>
<ul>
<li><code>GET /state</code></li>
<li><code>GET /scene</code></li>
<li><code>POST /command</code></li>
<li><code>WebSocket /events</code></li>
</ul>
<pre id="state"></pre>
<script>
const ws = new WebSocket(`ws://${location.host}/events`);
ws.onmessage = (m) => {
  const ev = JSON.parse(m.data);
  if (ev.state) document.getElementById("state").textContent = JSON.stringify(ev.state, null, 2);
};
</script>
</body>
</html>
)html";

std::string_view mime_type(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html; charset=utf-8";
  if (ext == ".js" || ext == ".mjs") return "text/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  if (ext == ".ico") return "image/x-icon";
  if (ext == ".wasm") return "application/wasm";
  return "application/octet-stream";
}

http::status status_for_error(std::string_view code) {
  if (code == "schema-error" || code == "invalid-command") return http::status::bad_request;
  if (code == "preset-not-found" || code == "unknown-component" || code == "unknown-drc-profile")
    return http::status::not_found;
  if (code == "no-scene" || code == "eof" || code == "not-an-object") return http::status::conflict;
  return http::status::unprocessable_entity;
}

class WsSession;

}  // namespace

struct HttpService::Impl : std::enable_shared_from_this<HttpService::Impl> {
  Impl(PlayerEngine& e, HttpServiceOptions o) : engine(e), options(std::move(o)), acceptor(ioc) {}

  void accept();
  void broadcast(std::shared_ptr<const std::string> text);

  PlayerEngine& engine;
  HttpServiceOptions options;
  asio::io_context ioc;
  tcp::acceptor acceptor;
  std::thread thread;
  std::uint16_t port = 0;
  std::atomic<bool> running{false};
  // touched only on the io thread
  std::vector<std::weak_ptr<WsSession>> sockets;
};

namespace {

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket socket, std::shared_ptr<HttpService::Impl> service)
      : ws_(std::move(socket)), service_(std::move(service)) {}

  void run(http::request<http::string_body> request) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(request, [self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
  }

  void send(std::shared_ptr<const std::string> text) {
    if (closed_) return;
    queue_.push_back(std::move(text));
    if (queue_.size() == 1) write_next();
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    service_->sockets.push_back(weak_from_this());
    PlayerEvent hello;
    hello.cause = "connect";
    hello.state = service_->engine.snapshot();
    send(std::make_shared<const std::string>(event_to_json(hello).dump()));
    read();
  }

  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->on_read(ec);
    });
  }

  // Incoming text frames are control commands; their effects come back as
  // broadcast events.
  void on_read(beast::error_code ec) {
    if (ec) {
      closed_ = true;
      return;
    }
    const auto text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    try {
      service_->engine.submit(command_from_json(json::parse(text)));
    } catch (const Error& e) {
      send(std::make_shared<const std::string>(
          json{{"type", "error"}, {"cause", "websocket"}, {"code", e.code_name()}, {"message", e.what()}}.dump()));
    } catch (const json::exception& e) {
      send(std::make_shared<const std::string>(
          json{{"type", "error"}, {"cause", "websocket"}, {"code", "schema-error"}, {"message", e.what()}}.dump()));
    }
    read();
  }

  void write_next() {
    ws_.text(true);
    ws_.async_write(asio::buffer(*queue_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      if (ec) {
                        self->closed_ = true;
                        self->queue_.clear();
                        return;
                      }
                      self->queue_.pop_front();
                      if (!self->queue_.empty()) self->write_next();
                    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  std::shared_ptr<HttpService::Impl> service_;
  beast::flat_buffer buffer_;
  std::deque<std::shared_ptr<const std::string>> queue_;
  bool closed_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket socket, std::shared_ptr<HttpService::Impl> service)
      : stream_(std::move(socket)), service_(std::move(service)) {}

  void run() { read(); }

 private:
  void read() {
    request_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, request_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec) {
    if (ec == http::error::end_of_stream) {
      stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
      return;
    }
    if (ec) return;
    if (websocket::is_upgrade(request_)) {
      if (request_.target() == "/events") {
        stream_.expires_never();
        std::make_shared<WsSession>(stream_.release_socket(), service_)->run(std::move(request_));
        return;
      }
      return reply(http::status::not_found, json{{"error", "not-found"}}.dump(), "application/json");
    }
    route();
  }

  void route() {
    const std::string target(request_.target());
    const auto path = target.substr(0, target.find('?'));
    const auto method = request_.method();
    if (path == "/state") {
      if (method != http::verb::get) return method_not_allowed();
      return reply(http::status::ok, state_to_json(*service_->engine.snapshot()).dump(), "application/json");
    }
    if (path == "/scene") {
      if (method != http::verb::get) return method_not_allowed();
      const auto state = service_->engine.snapshot();
      if (!state->loaded())
        return reply(http::status::not_found,
                     json{{"error", "no-scene"}, {"message", "no scene is loaded"}}.dump(), "application/json");
      return reply(http::status::ok, write_scene_json(*state->scene), "application/json");
    }
    if (path == "/command") {
      if (method != http::verb::post) return method_not_allowed();
      return command();
    }
    if (path == "/events")
      return reply(http::status::upgrade_required, json{{"error", "websocket-required"}}.dump(),
                   "application/json");
    if (method != http::verb::get && method != http::verb::head) return method_not_allowed();
    static_file(path);
  }

  void command() {
    ControlCommand cmd;
    try {
      cmd = command_from_json(json::parse(request_.body()));
    } catch (const Error& e) {
      json body = {{"type", "error"}, {"cause", "request"}, {"code", e.code_name()}, {"message", e.what()}};
      if (!e.path().empty()) body["pointer"] = e.path();
      return reply(http::status::bad_request, body.dump(), "application/json");
    } catch (const json::exception& e) {
      return reply(http::status::bad_request,
                   json{{"type", "error"}, {"cause", "request"}, {"code", "schema-error"}, {"message", e.what()}}
                       .dump(),
                   "application/json");
    }
    // answered once the engine has applied the command
    service_->engine.submit(std::move(cmd), [self = shared_from_this()](const std::vector<PlayerEvent>& events) {
      auto status = http::status::ok;
      json body = json::object();
      if (!events.empty()) {
        body = event_to_json(events.front());
        if (events.front().type == PlayerEvent::Type::error) status = status_for_error(events.front().code);
      }
      asio::post(self->stream_.get_executor(), [self, status, text = body.dump()]() mutable {
        self->reply(status, std::move(text), "application/json");
      });
    });
  }

  void static_file(const std::string& path) {
    const auto& root = service_->options.ui_dir;
    if (root.empty()) {
      if (path == "/" || path == "/index.html")
        return reply(http::status::ok, std::string(kPlaceholderPage), "text/html; charset=utf-8");
      return reply(http::status::not_found, "not found\n", "text/plain");
    }
    if (path.find("..") != std::string::npos || path.empty() || path.front() != '/')
      return reply(http::status::bad_request, "bad path\n", "text/plain");
    std::filesystem::path file = std::filesystem::path(root) / path.substr(1);
    std::error_code fs_ec;
    if (std::filesystem::is_directory(file, fs_ec)) file /= "index.html";
    std::ifstream in(file, std::ios::binary);
    if (!in) return reply(http::status::not_found, "not found\n", "text/plain");
    std::ostringstream content;
    content << in.rdbuf();
    reply(http::status::ok, content.str(), mime_type(file));
  }

  void method_not_allowed() {
    reply(http::status::method_not_allowed, json{{"error", "method-not-allowed"}}.dump(), "application/json");
  }

  void reply(http::status status, std::string body, std::string_view content_type) {
    auto response = std::make_shared<http::response<http::string_body>>(status, request_.version());
    response->set(http::field::server, "oba-player");
    response->set(http::field::content_type, beast::string_view(content_type.data(), content_type.size()));
    response->set(http::field::access_control_allow_origin, "*");
    response->keep_alive(request_.keep_alive());
    if (request_.method() != http::verb::head) response->body() = std::move(body);
    response->prepare_payload();
    http::async_write(stream_, *response,
                      [self = shared_from_this(), response](beast::error_code ec, std::size_t) {
                        if (ec) return;
                        if (response->need_eof()) {
                          self->stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
                          return;
                        }
                        self->read();
                      });
  }

  beast::tcp_stream stream_;
  std::shared_ptr<HttpService::Impl> service_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> request_;
};

}  // namespace

void HttpService::Impl::accept() {
  acceptor.async_accept(asio::make_strand(ioc), [self = shared_from_this()](beast::error_code ec, tcp::socket s) {
    if (ec) return;
    std::make_shared<HttpSession>(std::move(s), self)->run();
    self->accept();
  });
}

void HttpService::Impl::broadcast(std::shared_ptr<const std::string> text) {
  std::vector<std::weak_ptr<WsSession>> live;
  for (auto& weak : sockets) {
    if (auto s = weak.lock()) {
      s->send(text);
      live.push_back(weak);
    }
  }
  sockets = std::move(live);
}

HttpService::HttpService(PlayerEngine& engine, HttpServiceOptions options)
    : impl_(std::make_shared<Impl>(engine, std::move(options))) {
  std::weak_ptr<Impl> weak = impl_;
  engine.subscribe([weak](const PlayerEvent& event) {
    auto impl = weak.lock();
    if (!impl || !impl->running) return;
    auto text = std::make_shared<const std::string>(event_to_json(event).dump());
    asio::post(impl->ioc, [impl, text] { impl->broadcast(text); });
  });
}

HttpService::~HttpService() { stop(); }

void HttpService::start() {
  if (impl_->running) return;
  beast::error_code ec;
  const auto address = asio::ip::make_address(impl_->options.address, ec);
  if (ec) throw Error(ErrorCode::io_error, "invalid listen address " + impl_->options.address);
  const tcp::endpoint endpoint(address, impl_->options.port);
  impl_->acceptor.open(endpoint.protocol(), ec);
  if (!ec) impl_->acceptor.set_option(asio::socket_base::reuse_address(true), ec);
  if (!ec) impl_->acceptor.bind(endpoint, ec);
  if (!ec) impl_->acceptor.listen(asio::socket_base::max_listen_connections, ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot listen on " + impl_->options.address + ": " + ec.message());
  impl_->port = impl_->acceptor.local_endpoint().port();
  impl_->running = true;
  impl_->accept();
  impl_->thread = std::thread([impl = impl_] { impl->ioc.run(); });
}

void HttpService::stop() {
  if (!impl_->running) return;
  impl_->running = false;
  impl_->ioc.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
  beast::error_code ec;
  impl_->acceptor.close(ec);
}

std::uint16_t HttpService::port() const { return impl_->port; }

}  // namespace oba
