#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "tracelens/session.hpp"

namespace httplib {
class Server;
}

namespace tracelens::net {

inline constexpr size_t kMaxFrameBytes = 16 * 1024 * 1024;

// Frames on the persistent channel: 4-byte big-endian length, then UTF-8 JSON.
std::string EncodeFrame(std::string_view payload);

class FrameDecoder {
 public:
  void Feed(std::string_view bytes);
  // Next complete payload, if any. Throws Error(kProtocolError) when a
  // declared length exceeds kMaxFrameBytes.
  std::optional<std::string> Next();

 private:
  std::string buffer_;
};

struct ServerOptions {
  std::string host = "127.0.0.1";
  uint16_t port = 0;       // 0 picks a free port
  uint16_t http_port = 0;  // 0 picks a free port
  bool enable_http = true;
  SessionOptions session;
  // Sessions start on this dataset when set; otherwise clients send load_dataset.
  std::shared_ptr<const Dataset> dataset;
};

// Owns the live sessions. Each entry serializes its own writers.
class SessionRegistry {
 public:
  struct Entry {
    std::mutex mutex;
    Session session;
    explicit Entry(Session s) : session(std::move(s)) {}
  };

  std::string Create(Session session);
  std::shared_ptr<Entry> Find(const std::string& id) const;
  void Erase(const std::string& id);
  size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  uint64_t next_id_ = 1;
};

// One session per framed TCP connection; HTTP clients create sessions
// explicitly and post single frames.
class Server {
 public:
  explicit Server(ServerOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Binds and starts serving on background threads. Throws Error(kIoError).
  void Start();
  void Stop();
  // Blocks until Stop() is called from another thread or a signal handler.
  void Wait();

  uint16_t port() const { return port_; }
  uint16_t http_port() const { return http_port_; }
  SessionRegistry& registry() { return registry_; }

 private:
  class Connection;

  Session NewSession() const;
  void AcceptLoop();
  void ConfigureHttp();

  ServerOptions options_;
  SessionRegistry registry_;
  int listen_fd_ = -1;
  uint16_t port_ = 0;
  uint16_t http_port_ = 0;
  std::atomic<bool> running_{false};
  std::thread accept_thread_;
  std::thread http_thread_;
  std::unique_ptr<httplib::Server> http_;
  std::mutex connections_mutex_;
  std::vector<std::shared_ptr<Connection>> connections_;
};

}  // namespace tracelens::net
