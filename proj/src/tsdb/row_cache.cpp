#include "rtdap/tsdb/row_cache.hpp"

namespace rtdap::tsdb {

void RowCache::set_capacity(std::size_t rows) {
  std::lock_guard lock(mu_);
  capacity_ = rows;
  while (lru_.size() > capacity_) {
    index_.erase(lru_.back().first);
    lru_.pop_back();
  }
  ++epoch_;
}

std::size_t RowCache::capacity() const {
  std::lock_guard lock(mu_);
  return capacity_;
}

std::optional<RowCache::RowPtr> RowCache::lookup(const RowKey& key) {
  std::lock_guard lock(mu_);
  if (capacity_ == 0) return std::nullopt;
  auto it = index_.find(key);
  if (it == index_.end()) {
    ++misses_;
    return std::nullopt;
  }
  ++hits_;
  lru_.splice(lru_.begin(), lru_, it->second);
  return it->second->second;
}

std::uint64_t RowCache::epoch() const {
  std::lock_guard lock(mu_);
  return epoch_;
}

void RowCache::insert(const RowKey& key, RowPtr row, std::uint64_t epoch_at_read) {
  std::lock_guard lock(mu_);
  if (capacity_ == 0 || epoch_at_read != epoch_) return;
  if (auto it = index_.find(key); it != index_.end()) {
    it->second->second = std::move(row);
    lru_.splice(lru_.begin(), lru_, it->second);
    return;
  }
  lru_.emplace_front(key, std::move(row));
  index_[key] = lru_.begin();
  if (lru_.size() > capacity_) {
    index_.erase(lru_.back().first);
    lru_.pop_back();
  }
}

void RowCache::invalidate(std::span<const RowKey> keys) {
  std::lock_guard lock(mu_);
  ++epoch_;
  for (const auto& k : keys) {
    if (auto it = index_.find(k); it != index_.end()) {
      lru_.erase(it->second);
      index_.erase(it);
    }
  }
}

CacheStats RowCache::stats() const {
  std::lock_guard lock(mu_);
  return {hits_, misses_, capacity_, lru_.size()};
}

}  // namespace rtdap::tsdb
