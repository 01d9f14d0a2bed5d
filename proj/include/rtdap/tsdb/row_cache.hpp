#pragma once

#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <span>
#include <unordered_map>

#include "rtdap/core/rowkey.hpp"
#include "rtdap/tsdb/cells.hpp"

namespace rtdap::tsdb {

struct CacheStats {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::size_t capacity = 0;
  std::size_t size = 0;
};

/// Row-level LRU over merged raw rows. A null entry caches "row absent".
///
/// Readers take `epoch()` before reading the table and pass it to `insert`;
/// an insert is dropped if any invalidation happened in between, so a row
/// read before a concurrent write can never be cached after it.
class RowCache {
 public:
  using RowPtr = std::shared_ptr<const RawRow>;

  void set_capacity(std::size_t rows);
  std::size_t capacity() const;

  /// Outer optional: hit or miss. Inner pointer may be null (cached absence).
  std::optional<RowPtr> lookup(const RowKey& key);
  std::uint64_t epoch() const;
  void insert(const RowKey& key, RowPtr row, std::uint64_t epoch_at_read);
  void invalidate(std::span<const RowKey> keys);
  CacheStats stats() const;

 private:
  struct KeyHash {
    std::size_t operator()(const RowKey& k) const noexcept {
      return std::hash<std::uint64_t>{}((std::uint64_t{k.tag.value} << 40) ^ k.bucket);
    }
  };
  using Lru = std::list<std::pair<RowKey, RowPtr>>;

  mutable std::mutex mu_;
  std::size_t capacity_ = 0;
  Lru lru_;
  std::unordered_map<RowKey, Lru::iterator, KeyHash> index_;
  std::uint64_t epoch_ = 0;
  std::uint64_t hits_ = 0;
  std::uint64_t misses_ = 0;
};

}  // namespace rtdap::tsdb
