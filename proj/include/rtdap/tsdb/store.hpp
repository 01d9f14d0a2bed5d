#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include "rtdap/core/tag.hpp"
#include "rtdap/core/time.hpp"
#include "rtdap/core/value.hpp"
#include "rtdap/tsdb/cells.hpp"
#include "rtdap/tsdb/row_cache.hpp"
#include "rtdap/tsdb/sorted_table.hpp"
#include "rtdap/tsdb/tag_dictionary.hpp"

namespace rtdap::tsdb {

struct StoreOptions {
  /// Empty: everything in memory (no WAL, in-memory segments).
  std::filesystem::path dir;
  /// Raw table pre-split: shard i owns tag ids [1 + i*tags_per_shard, ...);
  /// the last shard is open-ended.
  std::uint32_t shards = 1;
  std::uint32_t tags_per_shard = 1024;
  bool wal = true;
  std::size_t memtable_bytes = 4u << 20;
  std::size_t max_segments = 8;
  std::size_t cache_rows = 0;
  /// Sleep applied to every put_batch / get_agg / upsert_agg call, emulating
  /// the round trip of a remote store. Zero for an embedded store.
  std::chrono::microseconds op_latency{0};
};

struct ScanStats {
  std::uint64_t rows = 0;          // hour buckets probed; rows present, for very wide windows
  std::uint64_t segment_rows = 0;  // row images read from segment files
  std::uint64_t cache_hits = 0;
};

struct StoreStats {
  std::uint64_t tags = 0;
  std::uint64_t records_written = 0;
  std::uint64_t put_batches = 0;
  std::uint64_t rows_read = 0;
  std::uint64_t segment_rows_read = 0;
  std::uint64_t agg_reads = 0;
  std::uint64_t agg_writes = 0;
  CacheStats cache;
};

/// Embedded time-series store: tag dictionary, hour-bucketed raw table
/// sharded by tag-id range, and minute/hour/day aggregate tables.
///
/// On-disk layout (see docs/storage.md): `tags.dict`, `shard-N/`, and
/// `agg-mm/`, `agg-hh/`, `agg-dd/`, each a directory of `segment-K.sst` plus
/// `wal-K.log`.
class Store {
 public:
  explicit Store(StoreOptions opts = {});
  ~Store();

  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  TagId register_tag(const TagName& name);
  std::optional<TagId> find_tag(const TagName& name) const { return dict_.find(name); }
  std::optional<TagName> tag_name(TagId id) const { return dict_.name_of(id); }
  const TagDictionary& dictionary() const noexcept { return dict_; }

  /// Visible to scans on return. Duplicate (tag, ms) keeps the last write.
  /// Throws Error(UnregisteredTag).
  void put_batch(std::span<const Sample> records);

  /// Records with from <= ts < to in ascending time. Throws UnknownTag, BadRange.
  std::vector<Sample> scan_raw(TagId tag, Timestamp from, Timestamp to, ScanStats* stats = nullptr);

  /// Cells with bucket in [bucket_of(from), bucket_of(to)).
  std::vector<AggCell> read_agg(TagId tag, Resolution res, Timestamp from, Timestamp to) const;
  std::optional<AggCell> get_agg(TagId tag, Resolution res, Timestamp bucket_start) const;
  void upsert_agg(const AggCell& cell);

  /// Recomputes the aggregate tables for tags [first, last] over [from, to)
  /// widened to whole days, directly from raw rows. Returns cells written.
  std::size_t rebuild_aggregates(TagId first, TagId last, Timestamp from, Timestamp to);

  void configure_cache(std::size_t rows) { cache_.set_capacity(rows); }
  CacheStats cache_stats() const { return cache_.stats(); }
  StoreStats stats() const;

  std::uint32_t shard_count() const noexcept { return static_cast<std::uint32_t>(shards_.size()); }
  std::uint32_t shard_of(TagId tag) const noexcept;

  /// Flushes every memtable into segments synchronously.
  void flush();
  void compact();

  /// Aggregation read-modify-write cycles on one tag serialize on this lock.
  std::mutex& agg_lock(TagId tag) { return agg_locks_[tag.value % agg_locks_.size()]; }

 private:
  struct RawTraits {
    using Value = RawRow;
    static void merge(RawRow& older, const RawRow& newer);
    static void encode(std::string& out, const RawRow& row);
    static RawRow decode(const RowKey& key, std::string_view bytes);
    static std::size_t approx_size(const RawRow& row);
  };
  struct AggTraits {
    using Value = AggCell;
    static void merge(AggCell& older, const AggCell& newer) { older = newer; }
    static void encode(std::string& out, const AggCell& cell);
    static AggCell decode(const RowKey& key, std::string_view bytes);
    static std::size_t approx_size(const AggCell&) { return sizeof(AggCell); }
  };
  using RawTable = SortedTable<RawTraits>;
  using AggTable = SortedTable<AggTraits>;

  AggTable& agg_table(Resolution r) const;
  void schedule_flush(std::function<void()> job);
  void flusher_loop();
  void delay() const;
  void check_tag(TagId tag) const;

  StoreOptions opts_;
  TagDictionary dict_;
  std::vector<std::unique_ptr<RawTable>> shards_;
  std::array<std::unique_ptr<AggTable>, 3> aggs_;
  RowCache cache_;
  std::array<std::mutex, 64> agg_locks_;

  mutable std::atomic<std::uint64_t> records_written_{0}, put_batches_{0}, rows_read_{0}, segment_rows_read_{0},
      agg_reads_{0}, agg_writes_{0};

  std::mutex flush_mu_;
  std::condition_variable flush_cv_;
  std::deque<std::function<void()>> flush_jobs_;
  bool stopping_ = false;
  std::thread flusher_;
};

}  // namespace rtdap::tsdb
