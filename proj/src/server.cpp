#include "tracelens/server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>

#include "httplib.h"
#include "tracelens/error.hpp"

namespace tracelens::net {

std::string EncodeFrame(std::string_view payload) {
  const auto size = static_cast<uint32_t>(payload.size());
  std::string out;
  out.reserve(payload.size() + 4);
  out.push_back(static_cast<char>((size >> 24) & 0xff));
  out.push_back(static_cast<char>((size >> 16) & 0xff));
  out.push_back(static_cast<char>((size >> 8) & 0xff));
  out.push_back(static_cast<char>(size & 0xff));
  out.append(payload);
  return out;
}

void FrameDecoder::Feed(std::string_view bytes) { buffer_.append(bytes); }

std::optional<std::string> FrameDecoder::Next() {
  if (buffer_.size() < 4) return std::nullopt;
  const auto* p = reinterpret_cast<const unsigned char*>(buffer_.data());
  const uint32_t size = (uint32_t{p[0]} << 24) | (uint32_t{p[1]} << 16) |
                        (uint32_t{p[2]} << 8) | uint32_t{p[3]};
  if (size > kMaxFrameBytes)
    throw Error(ErrorCode::kProtocolError, "frame of " + std::to_string(size) + " bytes is too large");
  if (buffer_.size() < 4 + size) return std::nullopt;
  std::string payload = buffer_.substr(4, size);
  buffer_.erase(0, 4 + size);
  return payload;
}

std::string SessionRegistry::Create(Session session) {
  std::lock_guard lock(mutex_);
  const std::string id = "s" + std::to_string(next_id_++);
  sessions_[id] = std::make_shared<Entry>(std::move(session));
  return id;
}

std::shared_ptr<SessionRegistry::Entry> SessionRegistry::Find(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

void SessionRegistry::Erase(const std::string& id) {
  std::lock_guard lock(mutex_);
  sessions_.erase(id);
}

size_t SessionRegistry::size() const {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

namespace {

std::string ErrorFrame(uint64_t revision, const std::string& message) {
  Frame frame;
  frame["type"] = "error";
  frame["revision"] = revision;
  frame["request"] = "";
  frame["code"] = ErrorCodeName(ErrorCode::kProtocolError);
  frame["message"] = message;
  return frame.dump();
}

// Parses and applies one payload under the entry's lock.
std::vector<std::string> Dispatch(SessionRegistry::Entry& entry, const std::string& payload) {
  std::lock_guard lock(entry.mutex);
  nlohmann::json message;
  try {
    message = nlohmann::json::parse(payload);
  } catch (const nlohmann::json::exception& e) {
    return {ErrorFrame(entry.session.revision(), std::string("malformed JSON: ") + e.what())};
  }
  std::vector<std::string> out;
  for (const Frame& frame : entry.session.HandleMessage(message)) out.push_back(frame.dump());
  return out;
}

}  // namespace

// Reads frames on one thread and writes on another, so a slow client never
// blocks event application.
class Server::Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(int fd, std::string session_id, std::shared_ptr<SessionRegistry::Entry> entry,
             SessionRegistry& registry)
      : fd_(fd), session_id_(std::move(session_id)), entry_(std::move(entry)), registry_(registry) {}

  ~Connection() { Join(); }

  void Start() {
    reader_ = std::thread([this] { ReadLoop(); });
    writer_ = std::thread([this] { WriteLoop(); });
  }

  void Close() {
    {
      std::lock_guard lock(mutex_);
      if (closed_) return;
      closed_ = true;
    }
    cv_.notify_all();
    ::shutdown(fd_, SHUT_RDWR);
  }

  void Join() {
    Close();
    if (reader_.joinable() && reader_.get_id() != std::this_thread::get_id()) reader_.join();
    if (writer_.joinable() && writer_.get_id() != std::this_thread::get_id()) writer_.join();
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
  }

  bool closed() {
    std::lock_guard lock(mutex_);
    return closed_;
  }

 private:
  void Enqueue(std::vector<std::string> payloads) {
    {
      std::lock_guard lock(mutex_);
      for (std::string& p : payloads) outbound_.push_back(EncodeFrame(p));
    }
    cv_.notify_one();
  }

  void ReadLoop() {
    FrameDecoder decoder;
    char buf[64 * 1024];
    while (true) {
      const ssize_t n = ::recv(fd_, buf, sizeof(buf), 0);
      if (n <= 0) break;
      decoder.Feed(std::string_view(buf, static_cast<size_t>(n)));
      try {
        while (auto payload = decoder.Next()) Enqueue(Dispatch(*entry_, *payload));
      } catch (const Error& e) {
        Enqueue({ErrorFrame(entry_->session.revision(), e.what())});
        break;
      }
    }
    registry_.Erase(session_id_);
    {
      std::lock_guard lock(mutex_);
      draining_ = true;
    }
    cv_.notify_all();
  }

  void WriteLoop() {
    while (true) {
      std::string data;
      {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return closed_ || draining_ || !outbound_.empty(); });
        if (outbound_.empty()) {
          if (closed_ || draining_) break;
          continue;
        }
        // Coalesce everything queued so one message's frames share a write.
        while (!outbound_.empty()) {
          data += outbound_.front();
          outbound_.pop_front();
        }
      }
      size_t sent = 0;
      while (sent < data.size()) {
        const ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
        if (n <= 0) {
          Close();
          return;
        }
        sent += static_cast<size_t>(n);
      }
    }
    ::shutdown(fd_, SHUT_WR);
  }

  int fd_;
  std::string session_id_;
  std::shared_ptr<SessionRegistry::Entry> entry_;
  SessionRegistry& registry_;
  std::thread reader_;
  std::thread writer_;
  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<std::string> outbound_;
  bool closed_ = false;
  bool draining_ = false;
};

Server::Server(ServerOptions options) : options_(std::move(options)) {}

Server::~Server() { Stop(); }

Session Server::NewSession() const {
  SessionOptions session_options = options_.session;
  if (!session_options.clock) {
    const auto start = std::chrono::steady_clock::now();
    session_options.clock = [start] {
      return std::chrono::duration_cast<std::chrono::milliseconds>(
                 std::chrono::steady_clock::now() - start)
          .count();
    };
  }
  if (options_.dataset) return Session(options_.dataset, std::move(session_options));
  return Session(std::move(session_options));
}

void Server::Start() {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw Error(ErrorCode::kIoError, "socket() failed");
  const int yes = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(options_.port);
  if (::inet_pton(AF_INET, options_.host.c_str(), &addr.sin_addr) != 1)
    throw Error(ErrorCode::kIoError, "bad host '" + options_.host + "'");
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(listen_fd_, 16) != 0) {
    const std::string reason = std::strerror(errno);
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw Error(ErrorCode::kIoError, "cannot listen on port " + std::to_string(options_.port) +
                                         ": " + reason);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  running_ = true;
  accept_thread_ = std::thread([this] { AcceptLoop(); });

  if (options_.enable_http) {
    http_ = std::make_unique<httplib::Server>();
    ConfigureHttp();
    if (options_.http_port == 0) {
      const int bound = http_->bind_to_any_port(options_.host);
      if (bound < 0) throw Error(ErrorCode::kIoError, "cannot bind HTTP port");
      http_port_ = static_cast<uint16_t>(bound);
    } else {
      if (!http_->bind_to_port(options_.host, options_.http_port))
        throw Error(ErrorCode::kIoError,
                    "cannot bind HTTP port " + std::to_string(options_.http_port));
      http_port_ = options_.http_port;
    }
    http_thread_ = std::thread([this] { http_->listen_after_bind(); });
    http_->wait_until_ready();
  }
}

void Server::AcceptLoop() {
  while (running_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (!running_) break;
      continue;
    }
    const int yes = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &yes, sizeof(yes));
    const std::string id = registry_.Create(NewSession());
    auto connection = std::make_shared<Connection>(fd, id, registry_.Find(id), registry_);
    {
      std::lock_guard lock(connections_mutex_);
      std::erase_if(connections_, [](const auto& c) { return c->closed(); });
      connections_.push_back(connection);
    }
    connection->Start();
  }
}

void Server::ConfigureHttp() {
  http_->Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("ok", "text/plain");
  });
  http_->Post("/sessions", [this](const httplib::Request&, httplib::Response& res) {
    const std::string id = registry_.Create(NewSession());
    res.set_content(nlohmann::json{{"session", id}}.dump(), "application/json");
  });
  http_->Post(R"(/sessions/([A-Za-z0-9]+)/frames)",
              [this](const httplib::Request& req, httplib::Response& res) {
                auto entry = registry_.Find(req.matches[1]);
                if (!entry) {
                  res.status = 404;
                  res.set_content(R"({"error":"unknown session"})", "application/json");
                  return;
                }
                std::string body = "[";
                bool first = true;
                for (const std::string& frame : Dispatch(*entry, req.body)) {
                  if (!first) body += ',';
                  body += frame;
                  first = false;
                }
                body += ']';
                res.set_content(body, "application/json");
              });
  http_->Delete(R"(/sessions/([A-Za-z0-9]+))",
                [this](const httplib::Request& req, httplib::Response& res) {
                  registry_.Erase(req.matches[1]);
                  res.status = 204;
                });
}

void Server::Stop() {
  running_ = false;
  if (listen_fd_ >= 0) {
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
  if (accept_thread_.joinable()) accept_thread_.join();
  std::vector<std::shared_ptr<Connection>> connections;
  {
    std::lock_guard lock(connections_mutex_);
    connections.swap(connections_);
  }
  for (auto& c : connections) c->Join();
  if (http_) {
    http_->stop();
    if (http_thread_.joinable()) http_thread_.join();
  }
}

void Server::Wait() {
  while (running_) std::this_thread::sleep_for(std::chrono::milliseconds(100));
}

}  // namespace tracelens::net
