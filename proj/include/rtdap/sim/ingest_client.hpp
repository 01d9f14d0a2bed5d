#pragma once

#include <string>

#include "rtdap/net/socket.hpp"
#include "rtdap/wire/frame.hpp"
#include "rtdap/wire/protocol.hpp"

namespace rtdap::sim {

/// Buffered sender of protocol frames over one TCP connection.
class IngestClient {
 public:
  static IngestClient connect(const net::Endpoint& ep, wire::Encoding enc = wire::Encoding::None) {
    return IngestClient(net::Socket::connect(ep), enc);
  }

  void send(const wire::Request& r) { raw(wire::write_frame(wire::encode_request(r), enc_)); }
  /// Appends pre-encoded frame bytes.
  void raw(std::string_view frame) {
    out_.append(frame);
    if (out_.size() >= flush_at_) flush();
  }
  void flush() {
    if (out_.empty()) return;
    sock_.send_all(out_);
    bytes_sent_ += out_.size();
    out_.clear();
  }
  /// Flushes and half-closes; the server sees EOF after the last frame.
  void finish() {
    flush();
    sock_.shutdown_write();
  }

  std::uint64_t bytes_sent() const noexcept { return bytes_sent_; }
  void set_flush_threshold(std::size_t bytes) noexcept { flush_at_ = bytes; }

 private:
  IngestClient(net::Socket s, wire::Encoding enc) : sock_(std::move(s)), enc_(enc) {}

  net::Socket sock_;
  wire::Encoding enc_;
  std::string out_;
  std::size_t flush_at_ = 64 * 1024;
  std::uint64_t bytes_sent_ = 0;
};

}  // namespace rtdap::sim
