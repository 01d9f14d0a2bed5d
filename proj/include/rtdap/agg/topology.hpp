#pragma once

#include <atomic>
#include <chrono>
#include <exception>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "rtdap/agg/adaptive_queue.hpp"
#include "rtdap/agg/bolt.hpp"

namespace rtdap::agg {

struct TopologyOptions {
  std::string group = "aggregation";
  std::size_t max_queue = 200;
  /// Called after durable writes and before the offset commit of every batch
  /// (crash-injection point for tests).
  Bolt::Hook before_commit;
  std::chrono::milliseconds idle_wait{20};
};

struct TopologyMetrics {
  BoltMetrics total;
  std::vector<BoltMetrics> per_partition;
  std::uint64_t lag = 0;
  bool running = false;
  std::string error;
};

/// One spout/bolt pipeline per log partition.
///
/// The spout thread keeps the partition's AdaptiveQueue filled from its own
/// read cursor (starting at the committed offset); the bolt thread drains the
/// whole queue, processes it as one batch and commits. A pipeline stops on
/// the first error, which is reported through `error()`.
class Topology {
 public:
  Topology(log::MessageLog& log, tsdb::Store& store, TopologyOptions opts);
  ~Topology();

  Topology(const Topology&) = delete;
  Topology& operator=(const Topology&) = delete;

  void start();
  void stop();

  /// True once every partition has zero lag.
  bool wait_drained(std::chrono::milliseconds timeout) const;
  TopologyMetrics metrics() const;
  /// Per-batch processing seconds across all pipelines.
  std::vector<double> batch_seconds() const;
  std::exception_ptr error() const;
  const TopologyOptions& options() const noexcept { return opts_; }

 private:
  struct Pipeline {
    Pipeline(tsdb::Store& store, log::MessageLog& log, const TopologyOptions& o, std::uint32_t p)
        : partition(p), queue(o.max_queue), bolt(store, log, o.group, p, o.before_commit) {}
    std::uint32_t partition;
    AdaptiveQueue<log::LogRecord> queue;
    Bolt bolt;
    mutable std::mutex metrics_mu;
    std::thread spout_thread, bolt_thread;
  };

  void spout_loop(Pipeline& p);
  void bolt_loop(Pipeline& p);
  void fail(std::exception_ptr e);

  log::MessageLog& log_;
  tsdb::Store& store_;
  TopologyOptions opts_;
  std::vector<std::unique_ptr<Pipeline>> pipelines_;
  std::atomic<bool> stop_{false};
  bool started_ = false;
  mutable std::mutex error_mu_;
  std::exception_ptr error_;
};

}  // namespace rtdap::agg
