#include "rtdap/agg/topology.hpp"

#include <iostream>

namespace rtdap::agg {

Topology::Topology(log::MessageLog& log, tsdb::Store& store, TopologyOptions opts)
    : log_(log), store_(store), opts_(std::move(opts)) {
  log_.register_group(opts_.group);
  for (std::uint32_t p = 0; p < log_.partition_count(); ++p)
    pipelines_.push_back(std::make_unique<Pipeline>(store_, log_, opts_, p));
}

Topology::~Topology() { stop(); }

void Topology::start() {
  if (started_) return;
  started_ = true;
  for (auto& p : pipelines_) {
    p->spout_thread = std::thread([this, pp = p.get()] { spout_loop(*pp); });
    p->bolt_thread = std::thread([this, pp = p.get()] { bolt_loop(*pp); });
  }
}

void Topology::stop() {
  stop_ = true;
  for (auto& p : pipelines_) p->queue.close();
  for (auto& p : pipelines_) {
    if (p->spout_thread.joinable()) p->spout_thread.join();
    if (p->bolt_thread.joinable()) p->bolt_thread.join();
  }
}

void Topology::fail(std::exception_ptr e) {
  {
    std::lock_guard lock(error_mu_);
    if (!error_) error_ = e;
  }
  stop_ = true;
  for (auto& p : pipelines_) p->queue.close();
}

void Topology::spout_loop(Pipeline& p) {
  try {
    std::uint64_t cursor = log_.committed(opts_.group, p.partition);
    while (!stop_) {
      const auto space = p.queue.space();
      if (space == 0) {
        p.queue.wait_for_space(opts_.idle_wait);
        continue;
      }
      auto polled = log_.read(p.partition, cursor, space);
      if (polled.empty()) {
        log_.wait_for(p.partition, cursor, opts_.idle_wait);
        continue;
      }
      cursor += spout_fill<log::LogRecord>(p.queue, polled);
    }
  } catch (...) {
    fail(std::current_exception());
  }
}

void Topology::bolt_loop(Pipeline& p) {
  try {
    while (!stop_) {
      auto batch = p.queue.drain(opts_.idle_wait);
      if (batch.empty()) continue;
      std::lock_guard lock(p.metrics_mu);
      p.bolt.process(batch);
    }
  } catch (...) {
    fail(std::current_exception());
  }
}

bool Topology::wait_drained(std::chrono::milliseconds timeout) const {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (true) {
    if (log_.total_lag(opts_.group) == 0) return true;
    if (error() || std::chrono::steady_clock::now() >= deadline) return false;
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
}

TopologyMetrics Topology::metrics() const {
  TopologyMetrics m;
  double weighted = 0;
  for (const auto& p : pipelines_) {
    BoltMetrics b;
    {
      std::lock_guard lock(p->metrics_mu);
      b = p->bolt.metrics();
    }
    b.avg_queue_size = p->queue.average_length();
    b.max_queue = p->queue.capacity();
    weighted += b.avg_queue_size * static_cast<double>(b.batches);
    m.total += b;
    m.per_partition.push_back(b);
  }
  m.total.avg_queue_size = m.total.batches ? weighted / static_cast<double>(m.total.batches) : 0.0;
  m.lag = log_.total_lag(opts_.group);
  m.running = started_ && !stop_;
  if (auto e = error()) {
    try {
      std::rethrow_exception(e);
    } catch (const std::exception& ex) {
      m.error = ex.what();
    } catch (...) {
      m.error = "unknown error";
    }
  }
  return m;
}

std::vector<double> Topology::batch_seconds() const {
  std::vector<double> out;
  for (const auto& p : pipelines_) {
    std::lock_guard lock(p->metrics_mu);
    const auto& s = p->bolt.batch_seconds();
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

std::exception_ptr Topology::error() const {
  std::lock_guard lock(error_mu_);
  return error_;
}

}  // namespace rtdap::agg
