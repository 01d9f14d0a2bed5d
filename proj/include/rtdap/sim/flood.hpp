#pragma once

#include <chrono>
#include <functional>
#include <mutex>
#include <string>

#include "rtdap/net/socket.hpp"
#include "rtdap/wire/protocol.hpp"

namespace rtdap::sim {

struct FloodConfig {
  int connections = 7;
  /// Bytes of filler text carried by each record frame (before compression).
  std::size_t payload_bytes = 64;
  wire::Encoding encoding = wire::Encoding::None;
  double duration = 10.0;  // s
  /// Shared cap on bytes written by all connections, in bits/s; 0 = none.
  double bandwidth_bps = 0;
  std::uint64_t seed = 1;
  /// Streams defined per connection; records cycle through them.
  std::uint32_t streams = 16;
  double warmup_fraction = 0.1;

  /// Throws Error(InvalidConfig).
  void validate() const;
};

struct FloodReport {
  std::uint64_t records = 0;  // in the measured window
  std::uint64_t wire_bytes = 0;
  double seconds = 0;
  double records_per_second = 0;
  /// Uncompressed payload bytes per second.
  double payload_bytes_per_second = 0;
  /// Compressed (or raw) frame bytes per record.
  double frame_bytes = 0;
  std::string error;
};

/// Sender-side throttle shared across connections. Takes tokens on credit:
/// a large request waits for the debt to be repaid, so the long-run rate is
/// exact regardless of chunk size.
class TokenBucket {
 public:
  TokenBucket(double bytes_per_second, double burst_bytes);
  void acquire(std::size_t bytes);

 private:
  std::mutex mu_;
  double rate_;
  double burst_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
};

/// Frame bodies (uncompressed) of one connection's replay ring. The filler
/// travels in a "pad" field the server ignores; the text is drawn from a
/// small vocabulary, so it compresses.
std::vector<std::string> flood_bodies(const FloodConfig& cfg, int connection, std::size_t count);

/// Saturates `connections` sockets for `duration` seconds replaying
/// pre-encoded frames. Throughput is measured after the warmup fraction;
/// with `accepted` supplied (e.g. a server counter) it counts records
/// accepted by the receiver, otherwise records written by the senders.
FloodReport run_flood(const FloodConfig& cfg, const net::Endpoint& target,
                      std::function<std::uint64_t()> accepted = {});

}  // namespace rtdap::sim
