#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rtdap/core/record_file.hpp"
#include "rtdap/core/value.hpp"

namespace rtdap::log {

/// A sample with the offset it was assigned inside its partition.
struct LogRecord {
  Sample sample;
  std::uint64_t offset = 0;

  friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

enum class Durability { Memory, File };

struct LogOptions {
  std::uint32_t partitions = 4;
  Durability durability = Durability::Memory;
  std::filesystem::path dir;  // required for File
  bool fsync = false;
};

struct AppendResult {
  std::uint32_t partition = 0;
  std::uint64_t offset = 0;
};

/// Embedded partitioned append-only log with consumer groups.
///
/// Partition of a record is `tagId mod partitionCount`, fixed at creation, so
/// every record of a tag lands in the same partition in append order.
/// Consumers poll from their committed position and commit after processing,
/// which yields at-least-once delivery across restarts.
///
/// File layout under `dir`: `partition-<p>.log` (checksummed records, see
/// docs/log-format.md) and `groups/<name>.offsets`.
class MessageLog {
 public:
  /// Throws Error(InvalidConfig) for partitions outside 1..256, IoError in
  /// file mode. File mode recovers existing records and commits.
  explicit MessageLog(LogOptions opts);
  ~MessageLog();

  MessageLog(const MessageLog&) = delete;
  MessageLog& operator=(const MessageLog&) = delete;

  std::uint32_t partition_count() const noexcept { return static_cast<std::uint32_t>(partitions_.size()); }
  std::uint32_t partition_of(TagId tag) const noexcept { return tag.value % partition_count(); }

  AppendResult append(const Sample& s);
  AppendResult append(TagId tag, Timestamp time, Value value, Status status) {
    return append(Sample{tag, time, std::move(value), status});
  }
  /// Appends a run of samples; each still goes to its own tag's partition.
  void append_batch(std::span<const Sample> samples);

  std::uint64_t head(std::uint32_t partition) const;
  std::uint64_t total_records() const;

  /// Creating an existing group is a no-op.
  void register_group(const std::string& group);
  bool has_group(const std::string& group) const;

  /// Up to max_records starting at the group's committed offset. Never moves
  /// the committed offset. Throws Error(UnknownGroup).
  std::vector<LogRecord> poll(const std::string& group, std::uint32_t partition, std::size_t max_records) const;
  /// Up to max_records starting at an explicit offset (consumer-side cursor).
  std::vector<LogRecord> read(std::uint32_t partition, std::uint64_t from, std::size_t max_records) const;

  /// committed = max(committed, up_to). Throws UnknownGroup, OffsetBeyondHead.
  void commit(const std::string& group, std::uint32_t partition, std::uint64_t up_to);
  std::uint64_t committed(const std::string& group, std::uint32_t partition) const;
  std::uint64_t lag(const std::string& group, std::uint32_t partition) const;
  std::uint64_t total_lag(const std::string& group) const;

  /// Blocks until head(partition) > offset or the timeout elapses.
  bool wait_for(std::uint32_t partition, std::uint64_t offset, std::chrono::milliseconds timeout) const;

 private:
  struct Partition {
    mutable std::mutex mu;
    mutable std::condition_variable cv;
    std::vector<LogRecord> records;
    RecordFile file;
  };

  void append_locked(Partition& p, const Sample& s, std::string* framed);
  void persist_group_locked(const std::string& group, const std::vector<std::uint64_t>& offsets);
  const Partition& partition(std::uint32_t p) const;

  LogOptions opts_;
  std::vector<std::unique_ptr<Partition>> partitions_;

  mutable std::mutex groups_mu_;
  std::map<std::string, std::vector<std::uint64_t>> groups_;
};

}  // namespace rtdap::log
