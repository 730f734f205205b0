#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "oba/player.hpp"

namespace oba {

struct HttpServiceOptions {
  std::string address = "127.0.0.1";
  std::uint16_t port = 0;  // 0 picks a free port
  /// Directory served at "/"; a built-in placeholder page is used when empty.
  std::string ui_dir;
};

/// HTTP and WebSocket front end for a PlayerEngine.
///
///   GET  /state    current state snapshot
///   GET  /scene    scene JSON of the loaded programme
///   POST /command  one control command; answers with the resulting event
///   GET  /events   WebSocket upgrade; pushes every engine event
///   GET  /...      static files
class HttpService {
 public:
  HttpService(PlayerEngine& engine, HttpServiceOptions options);
  ~HttpService();
  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  /// Binds and starts serving on a background thread. Throws io-error when
  /// the address cannot be bound.
  void start();
  void stop();
  /// Bound port, valid after start().
  std::uint16_t port() const;

  struct Impl;

 private:
  std::shared_ptr<Impl> impl_;
};

}  // namespace oba
