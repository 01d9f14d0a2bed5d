#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "rtdap/ingest/session.hpp"
#include "rtdap/net/socket.hpp"

namespace rtdap::ingest {

struct IngestOptions {
  net::Endpoint bind{"0.0.0.0", 7000};
  int workers = 4;
  std::size_t max_frame = wire::kMaxFrameBody;
  /// How long stop() keeps serving open connections before closing them.
  std::chrono::milliseconds drain_timeout{2000};

  /// Throws Error(InvalidConfig).
  void validate() const;
};

struct IngestStats {
  double records_per_second = 0;
  std::int64_t active_connections = 0;
  std::uint64_t connections_total = 0;
  std::uint64_t total_accepted = 0;
  std::uint64_t total_rejected = 0;
  std::uint64_t frames = 0;
  std::uint64_t bytes_in = 0;
  std::uint64_t protocol_errors = 0;
};

/// TCP portal: an acceptor thread hands connections round-robin to epoll
/// worker threads; each connection is owned by exactly one worker, so its
/// frames are handled in arrival order.
class IngestServer {
 public:
  /// Binds immediately (Error(BindFailed)); serving starts with start().
  IngestServer(IngestOptions opts, tsdb::Store& store, log::MessageLog& log);
  ~IngestServer();

  IngestServer(const IngestServer&) = delete;
  IngestServer& operator=(const IngestServer&) = delete;

  void start();
  /// Stops accepting, serves open connections until they close or the drain
  /// timeout passes, reads whatever is still buffered, then closes them.
  void stop();

  std::uint16_t port() const noexcept { return port_; }
  /// records_per_second is measured since the previous stats() call.
  IngestStats stats();
  const IngestCounters& counters() const noexcept { return counters_; }

 private:
  struct Worker;

  void accept_loop();

  IngestOptions opts_;
  tsdb::Store& store_;
  log::MessageLog& log_;
  net::Socket listener_;
  std::uint16_t port_ = 0;
  IngestCounters counters_;
  std::vector<std::unique_ptr<Worker>> workers_;
  std::thread acceptor_;
  std::atomic<bool> stopping_{false};
  bool started_ = false;
  std::uint64_t next_conn_ = 1;

  std::mutex rate_mu_;
  std::chrono::steady_clock::time_point rate_time_;
  std::uint64_t rate_count_ = 0;
};

}  // namespace rtdap::ingest
