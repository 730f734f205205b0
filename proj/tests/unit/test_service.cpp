#include <doctest.h>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <fstream>
#include <json.hpp>

#include "oba/authoring.hpp"
#include "oba/container.hpp"
#include "oba/http_service.hpp"
#include "oba/player.hpp"
#include "oba/scene_json.hpp"
#include "support/signals.hpp"

using namespace oba;
using namespace oba::testing;
using nlohmann::json;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = boost::asio::ip::tcp;

namespace {

struct Reply {
  int status = 0;
  std::string body;
  std::string content_type;
};

Reply request(std::uint16_t port, http::verb verb, const std::string& target, const std::string& body = {}) {
  boost::asio::io_context ioc;
  tcp::resolver resolver(ioc);
  beast::tcp_stream stream(ioc);
  stream.expires_after(std::chrono::seconds(10));
  stream.connect(resolver.resolve("127.0.0.1", std::to_string(port)));
  http::request<http::string_body> req(verb, target, 11);
  req.set(http::field::host, "127.0.0.1");
  if (!body.empty()) {
    req.set(http::field::content_type, "application/json");
    req.body() = body;
  }
  req.prepare_payload();
  http::write(stream, req);
  beast::flat_buffer buffer;
  http::response<http::string_body> res;
  http::read(stream, buffer, res);
  beast::error_code ec;
  stream.socket().shutdown(tcp::socket::shutdown_both, ec);
  return {static_cast<int>(res.result_int()), res.body(), std::string(res[http::field::content_type])};
}

Reply post_command(std::uint16_t port, const json& command) {
  return request(port, http::verb::post, "/command", command.dump());
}

struct ServiceFixture {
  TempDir dir;
  std::string path;
  PlayerEngine engine;
  std::unique_ptr<HttpService> service;

  explicit ServiceFixture(std::string ui_dir = {}) {
    const auto fixture = dialog_fixture(3.0);
    BedSpec bed;
    bed.tracks = {0, 1};
    ObjectSpec voice;
    voice.track = 2;
    auto authored = stamp_loudness(author_dialog_plus_scene(bed, voice), memory_source(fixture.pcm));
    path = dir.file("scene.obas");
    write_container(path, authored, fixture.pcm, kRate);
    HttpServiceOptions options;
    options.ui_dir = std::move(ui_dir);
    service = std::make_unique<HttpService>(engine, options);
    service->start();
    engine.start();
  }
  ~ServiceFixture() {
    service->stop();
    engine.stop();
  }
  std::uint16_t port() const { return service->port(); }
};

}  // namespace

TEST_CASE("state, scene and command endpoints") {
  ServiceFixture fx;
  auto state = request(fx.port(), http::verb::get, "/state");
  CHECK(state.status == 200);
  CHECK(state.content_type == "application/json");
  CHECK(json::parse(state.body)["loaded"] == false);
  CHECK(request(fx.port(), http::verb::get, "/scene").status == 404);

  auto loaded = post_command(fx.port(), {{"type", "load"}, {"path", fx.path}});
  REQUIRE(loaded.status == 200);
  CHECK(json::parse(loaded.body)["state"]["active_preset"] == "default_mix");

  auto scene = request(fx.port(), http::verb::get, "/scene");
  CHECK(scene.status == 200);
  CHECK(read_scene_json(scene.body).scene.scene_id == "scene");

  auto gain = post_command(fx.port(), {{"type", "set_gain"}, {"component", "dialog"}, {"gain_db", 12}});
  CHECK(gain.status == 200);
  CHECK(json::parse(gain.body)["applied"]["gain_db"] == 9.0);
  CHECK(json::parse(request(fx.port(), http::verb::get, "/state").body)["user"]["gain_offsets_db"]["dialog"] ==
        9.0);

  auto missing = post_command(fx.port(), {{"type", "select_preset"}, {"preset_id", "nope"}});
  CHECK(missing.status == 404);
  CHECK(json::parse(missing.body)["code"] == "preset-not-found");

  auto bad = post_command(fx.port(), {{"type", "set_gain"}, {"component", "dialog"}});
  CHECK(bad.status == 400);
  CHECK(json::parse(bad.body)["pointer"] == "/gain_db");
  CHECK(request(fx.port(), http::verb::post, "/command", "{not json").status == 400);
  CHECK(request(fx.port(), http::verb::post, "/state").status == 405);
}

TEST_CASE("static files") {
  TempDir ui;
  std::ofstream(ui.file("index.html")) << "<html>ui</html>";
  std::ofstream(ui.file("app.js")) << "let x = 1;";
  ServiceFixture fx(ui.path().string());
  auto index = request(fx.port(), http::verb::get, "/");
  CHECK(index.status == 200);
  CHECK(index.body == "<html>ui</html>");
  CHECK(index.content_type.find("text/html") == 0);
  CHECK(request(fx.port(), http::verb::get, "/app.js").content_type.find("javascript") != std::string::npos);
  CHECK(request(fx.port(), http::verb::get, "/absent.css").status == 404);
  CHECK(request(fx.port(), http::verb::get, "/../secret").status != 200);
}

TEST_CASE("websocket streams events and accepts commands") {
  ServiceFixture fx;
  boost::asio::io_context ioc;
  tcp::resolver resolver(ioc);
  websocket::stream<beast::tcp_stream> ws(ioc);
  beast::get_lowest_layer(ws).expires_after(std::chrono::seconds(10));
  beast::get_lowest_layer(ws).connect(resolver.resolve("127.0.0.1", std::to_string(fx.port())));
  ws.handshake("127.0.0.1", "/events");
  auto next = [&] {
    beast::flat_buffer buffer;
    ws.read(buffer);
    return json::parse(beast::buffers_to_string(buffer.data()));
  };
  const auto hello = next();
  CHECK(hello["cause"] == "connect");
  CHECK(hello["state"]["loaded"] == false);

  REQUIRE(post_command(fx.port(), {{"type", "load"}, {"path", fx.path}}).status == 200);
  auto event = next();
  CHECK(event["type"] == "state_changed");
  CHECK(event["cause"] == "load");

  ws.write(boost::asio::buffer(json{{"type", "set_ui_language"}, {"language", "de"}}.dump()));
  event = next();
  CHECK(event["cause"] == "set_ui_language");
  CHECK(event["state"]["ui_language"] == "de");

  ws.write(boost::asio::buffer(std::string("{\"type\": 3}")));
  event = next();
  CHECK(event["type"] == "error");
  CHECK(event["code"] == "schema-error");

  ws.write(boost::asio::buffer(json{{"type", "play"}}.dump()));
  bool saw_eof = false;
  for (int i = 0; i < 1000 && !saw_eof; ++i) saw_eof = next()["type"] == "eof";
  CHECK(saw_eof);
  ws.close(websocket::close_code::normal);
}
