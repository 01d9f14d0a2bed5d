#include "rtdap/agg/bolt.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

#include "rtdap/agg/update_cell.hpp"

namespace rtdap::agg {
namespace {

using Clock = std::chrono::steady_clock;
using CellKey = std::tuple<std::uint32_t, Resolution, Timestamp>;

}  // namespace

BoltMetrics& BoltMetrics::operator+=(const BoltMetrics& o) {
  total_exec += o.total_exec;
  scan += o.scan;
  write += o.write;
  compute += o.compute;
  batches += o.batches;
  records += o.records;
  ops += o.ops;
  max_queue = std::max(max_queue, o.max_queue);
  return *this;
}

OpCounts AggregationWriter::write(std::span<const Sample> samples, std::span<const std::uint64_t> offsets,
                                  BoltMetrics* timing) {
  OpCounts ops;
  if (samples.empty()) return ops;
  BoltMetrics local;

  auto t0 = Clock::now();
  store_.put_batch(samples);
  ++ops.physical_writes;
  ops.logical_writes += samples.size();
  auto t1 = Clock::now();
  local.write += t1 - t0;

  std::set<std::mutex*> locks;
  std::map<CellKey, std::optional<tsdb::AggCell>> cells;
  std::size_t floats = 0;
  for (const auto& s : samples) {
    if (!std::holds_alternative<double>(s.value)) continue;
    ++floats;
    locks.insert(&store_.agg_lock(s.tag));
    for (auto r : kAllResolutions) cells.try_emplace({s.tag.value, r, bucket_of(s.time, r)});
  }
  ops.logical_reads += 3 * floats;
  ops.logical_writes += 3 * floats;
  if (floats == 0) {
    if (timing) *timing += local;
    return ops;
  }

  // std::set orders by address, giving a global lock order.
  std::vector<std::unique_lock<std::mutex>> held;
  for (auto* m : locks) held.emplace_back(*m);

  auto t2 = Clock::now();
  for (auto& [key, cell] : cells) {
    cell = store_.get_agg(TagId{std::get<0>(key)}, std::get<1>(key), std::get<2>(key));
    ++ops.physical_reads;
  }
  auto t3 = Clock::now();
  local.scan += t3 - t2;

  std::set<CellKey> dirty;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (!std::holds_alternative<double>(s.value)) continue;
    const bool tracked = i < offsets.size();
    for (auto r : kAllResolutions) {
      const CellKey key{s.tag.value, r, bucket_of(s.time, r)};
      auto& cell = cells[key];
      if (tracked && cell && cell->applied_offset != tsdb::kNoOffset && offsets[i] <= cell->applied_offset) continue;
      cell = update_cell(cell, s, r);
      if (tracked) cell->applied_offset = offsets[i];
      dirty.insert(key);
    }
  }
  auto t4 = Clock::now();
  local.compute += t4 - t3;

  for (const auto& key : dirty) {
    store_.upsert_agg(*cells[key]);
    ++ops.physical_writes;
  }
  local.write += Clock::now() - t4;
  if (timing) *timing += local;
  return ops;
}

OpCounts Bolt::process(std::span<const log::LogRecord> batch) {
  if (batch.empty()) return {};
  const auto t0 = Clock::now();
  std::vector<Sample> samples;
  std::vector<std::uint64_t> offsets;
  samples.reserve(batch.size());
  offsets.reserve(batch.size());
  for (const auto& r : batch) {
    samples.push_back(r.sample);
    offsets.push_back(r.offset);
  }
  auto ops = writer_.write(samples, offsets, &metrics_);
  if (before_commit_) before_commit_(partition_, metrics_.batches);
  log_.commit(group_, partition_, batch.back().offset + 1);

  const auto dt = Clock::now() - t0;
  metrics_.total_exec += dt;
  metrics_.ops += ops;
  ++metrics_.batches;
  metrics_.records += batch.size();
  batch_seconds_.push_back(std::chrono::duration<double>(dt).count());
  return ops;
}

}  // namespace rtdap::agg
