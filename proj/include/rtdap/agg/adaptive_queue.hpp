#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <mutex>
#include <span>
#include <vector>

#include "rtdap/core/error.hpp"

namespace rtdap::agg {

/// Bounded FIFO between a spout (filler) and a bolt (drainer).
///
/// The drainer always takes the whole queue as one batch, so the batch size
/// follows the load: it grows while the bolt is busy and is capped at
/// `max_queue`. Each drain records the length taken, giving the average
/// queue size.
template <class T>
class AdaptiveQueue {
 public:
  explicit AdaptiveQueue(std::size_t max_queue) : max_(max_queue) {
    if (max_queue < 1 || max_queue > 100'000) throw Error(Errc::InvalidConfig, "max queue must be in 1..100000");
  }

  std::size_t capacity() const noexcept { return max_; }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return items_.size();
  }

  std::size_t space() const {
    std::lock_guard lock(mu_);
    return max_ - items_.size();
  }

  /// Appends as many leading items as fit; returns how many were taken.
  std::size_t push(std::span<const T> items) {
    std::size_t n;
    {
      std::lock_guard lock(mu_);
      n = std::min(items.size(), max_ - items_.size());
      items_.insert(items_.end(), items.begin(), items.begin() + static_cast<std::ptrdiff_t>(n));
    }
    if (n) not_empty_.notify_one();
    return n;
  }

  /// Waits up to `timeout` for at least one item, then takes everything.
  template <class Rep, class Period>
  std::vector<T> drain(std::chrono::duration<Rep, Period> timeout) {
    std::vector<T> out;
    {
      std::unique_lock lock(mu_);
      not_empty_.wait_for(lock, timeout, [&] { return !items_.empty() || closed_; });
      if (items_.empty()) return out;
      out.assign(std::make_move_iterator(items_.begin()), std::make_move_iterator(items_.end()));
      items_.clear();
      ++drains_;
      drained_items_ += out.size();
    }
    not_full_.notify_all();
    return out;
  }

  /// Non-blocking drain.
  std::vector<T> drain_now() { return drain(std::chrono::milliseconds(0)); }

  template <class Rep, class Period>
  bool wait_for_space(std::chrono::duration<Rep, Period> timeout) {
    std::unique_lock lock(mu_);
    return not_full_.wait_for(lock, timeout, [&] { return items_.size() < max_ || closed_; });
  }

  void close() {
    {
      std::lock_guard lock(mu_);
      closed_ = true;
    }
    not_empty_.notify_all();
    not_full_.notify_all();
  }

  /// Mean batch length over all drains so far.
  double average_length() const {
    std::lock_guard lock(mu_);
    return drains_ ? static_cast<double>(drained_items_) / static_cast<double>(drains_) : 0.0;
  }

 private:
  const std::size_t max_;
  mutable std::mutex mu_;
  std::condition_variable not_empty_, not_full_;
  std::deque<T> items_;
  bool closed_ = false;
  std::uint64_t drains_ = 0;
  std::uint64_t drained_items_ = 0;
};

/// Moves the leading polled records that fit into the queue. Whatever does
/// not fit stays in the log (the caller's cursor advances only by the
/// returned count), so backlog accumulates as log lag.
template <class T>
std::size_t spout_fill(AdaptiveQueue<T>& queue, std::span<const T> polled) {
  return queue.push(polled);
}

}  // namespace rtdap::agg
