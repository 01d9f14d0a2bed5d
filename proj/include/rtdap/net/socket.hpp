#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace rtdap::net {

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  /// "host:port"; throws Error(InvalidConfig).
  static Endpoint parse(std::string_view text);
  std::string str() const { return host + ":" + std::to_string(port); }
};

/// Owning file-descriptor wrapper for a TCP socket.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) noexcept : fd_(fd) {}
  Socket(Socket&& o) noexcept : fd_(o.release()) {}
  Socket& operator=(Socket&& o) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { close(); }

  /// Blocking connect with TCP_NODELAY. Throws Error(ConnectionLost).
  static Socket connect(const Endpoint& ep);
  /// Listening socket; port 0 picks an ephemeral port. Throws Error(BindFailed).
  static Socket listen(const Endpoint& ep, int backlog = 128);

  int fd() const noexcept { return fd_; }
  bool valid() const noexcept { return fd_ >= 0; }
  int release() noexcept {
    int f = fd_;
    fd_ = -1;
    return f;
  }
  void close() noexcept;

  /// Throws Error(ConnectionLost) on failure.
  void send_all(std::string_view data) const;
  /// Returns bytes read, 0 on orderly EOF; throws Error(ConnectionLost).
  std::size_t recv_some(char* buf, std::size_t len) const;
  void shutdown_write() const noexcept;
  void set_nonblocking() const;
  std::uint16_t local_port() const;

 private:
  int fd_ = -1;
};

}  // namespace rtdap::net
