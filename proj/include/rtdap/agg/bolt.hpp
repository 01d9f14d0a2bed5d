#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rtdap/log/message_log.hpp"
#include "rtdap/tsdb/store.hpp"

namespace rtdap::agg {

/// Storage operations issued for aggregation. Logical counts follow the
/// record-at-a-time accounting (3 reads + 4 writes per float record, 1 write
/// for non-float); physical counts are the calls actually made.
struct OpCounts {
  std::uint64_t logical_reads = 0;
  std::uint64_t logical_writes = 0;
  std::uint64_t physical_reads = 0;
  std::uint64_t physical_writes = 0;

  OpCounts& operator+=(const OpCounts& o) {
    logical_reads += o.logical_reads;
    logical_writes += o.logical_writes;
    physical_reads += o.physical_reads;
    physical_writes += o.physical_writes;
    return *this;
  }
};

struct BoltMetrics {
  std::chrono::nanoseconds total_exec{0};
  std::chrono::nanoseconds scan{0};
  std::chrono::nanoseconds write{0};
  std::chrono::nanoseconds compute{0};
  std::uint64_t batches = 0;
  std::uint64_t records = 0;
  double avg_queue_size = 0;
  std::size_t max_queue = 0;
  OpCounts ops;

  BoltMetrics& operator+=(const BoltMetrics& o);
};

/// Writes samples to the raw table and folds them into the minute/hour/day
/// tables through one batched read-modify-write per touched cell.
///
/// With offsets supplied, a cell skips records at or below its
/// applied_offset, so replaying a batch after a crash is harmless.
class AggregationWriter {
 public:
  explicit AggregationWriter(tsdb::Store& store) : store_(store) {}

  OpCounts write(std::span<const Sample> samples, std::span<const std::uint64_t> offsets = {},
                 BoltMetrics* timing = nullptr);

 private:
  tsdb::Store& store_;
};

/// Processes drained batches for one log partition: raw put, aggregate
/// read/fold/write, then offset commit.
class Bolt {
 public:
  using Hook = std::function<void(std::uint32_t partition, std::uint64_t batch_index)>;

  Bolt(tsdb::Store& store, log::MessageLog& log, std::string group, std::uint32_t partition, Hook before_commit = {})
      : writer_(store), log_(log), group_(std::move(group)), partition_(partition), before_commit_(std::move(before_commit)) {}

  /// `batch` must be a contiguous offset run of this partition. Store errors
  /// propagate before the commit, leaving the batch to be redelivered.
  OpCounts process(std::span<const log::LogRecord> batch);

  const BoltMetrics& metrics() const noexcept { return metrics_; }
  /// Wall time of each processed batch, in order.
  const std::vector<double>& batch_seconds() const noexcept { return batch_seconds_; }

 private:
  AggregationWriter writer_;
  log::MessageLog& log_;
  std::string group_;
  std::uint32_t partition_;
  Hook before_commit_;
  BoltMetrics metrics_;
  std::vector<double> batch_seconds_;
};

}  // namespace rtdap::agg
