#include "rtdap/tsdb/store.hpp"

#include <algorithm>
#include <iostream>
#include <map>
#include <set>

#include "rtdap/core/codec.hpp"
#include "rtdap/core/error.hpp"

namespace rtdap::tsdb {
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kHour = width(Resolution::Hour);
constexpr std::uint64_t kProbeLimit = 4096;

std::size_t resolution_index(Resolution r) {
  switch (r) {
    case Resolution::Minute: return 0;
    case Resolution::Hour: return 1;
    case Resolution::Day: return 2;
  }
  return 0;
}

constexpr const char* kAggDirs[] = {"agg-mm", "agg-hh", "agg-dd"};

}  // namespace

// Raw row bytes: BE32(cells) ‖ cells × (qualifier ‖ value).
void Store::RawTraits::merge(RawRow& older, const RawRow& newer) {
  for (const auto& [offset, cell] : newer.cells) older.cells.insert_or_assign(offset, cell);
}

void Store::RawTraits::encode(std::string& out, const RawRow& row) {
  bytes::put_be32(out, static_cast<std::uint32_t>(row.cells.size()));
  for (const auto& [offset, cell] : row.cells) {
    auto q = encode_qualifier({kind_of(cell.value), cell.status, offset});
    out.append(reinterpret_cast<const char*>(q.data()), q.size());
    encode_value(out, cell.value);
  }
}

RawRow Store::RawTraits::decode(const RowKey&, std::string_view data) {
  bytes::Reader in(data);
  RawRow row;
  auto n = in.be32();
  for (std::uint32_t i = 0; i < n; ++i) {
    auto qb = in.take(kQualifierSize);
    auto q = decode_qualifier(std::span(reinterpret_cast<const std::uint8_t*>(qb.data()), qb.size()));
    row.cells.emplace_hint(row.cells.end(), q.offset_millis, RawCell{decode_value(in, q.kind), q.status});
  }
  return row;
}

std::size_t Store::RawTraits::approx_size(const RawRow& row) { return row.cells.size() * 64; }

// Aggregate bytes: res ‖ min ‖ max ‖ close ‖ closeTs ‖ count ‖ appliedOffset.
void Store::AggTraits::encode(std::string& out, const AggCell& c) {
  out.push_back(static_cast<char>(resolution_index(c.resolution)));
  bytes::put_f64(out, c.min);
  bytes::put_f64(out, c.max);
  bytes::put_f64(out, c.close);
  bytes::put_be64(out, c.close_time);
  bytes::put_be64(out, c.count);
  bytes::put_be64(out, c.applied_offset);
}

AggCell Store::AggTraits::decode(const RowKey& key, std::string_view data) {
  bytes::Reader in(data);
  AggCell c;
  c.tag = key.tag;
  c.bucket = key.bucket;
  auto r = in.u8();
  if (r > 2) throw Error(Errc::CorruptData, "bad resolution byte");
  c.resolution = kAllResolutions[r];
  c.min = in.f64();
  c.max = in.f64();
  c.close = in.f64();
  c.close_time = in.be64();
  c.count = in.be64();
  c.applied_offset = in.be64();
  return c;
}

namespace {

// Runs before the dictionary member opens its file.
StoreOptions prepared(StoreOptions o) {
  if (o.shards < 1) throw Error(Errc::InvalidConfig, "store needs at least one shard");
  if (o.tags_per_shard < 1) throw Error(Errc::InvalidConfig, "tags_per_shard must be positive");
  if (!o.dir.empty()) {
    std::error_code ec;
    fs::create_directories(o.dir, ec);
    if (ec) throw Error(Errc::IoError, "create " + o.dir.string() + ": " + ec.message());
  }
  return o;
}

}  // namespace

Store::Store(StoreOptions opts)
    : opts_(prepared(std::move(opts))), dict_(opts_.dir.empty() ? fs::path{} : opts_.dir / "tags.dict") {
  auto table_opts = [&](const std::string& sub) {
    TableOptions t;
    t.dir = opts_.dir.empty() ? fs::path{} : opts_.dir / sub;
    t.wal = opts_.wal;
    t.memtable_bytes = opts_.memtable_bytes;
    t.max_segments = opts_.max_segments;
    return t;
  };
  for (std::uint32_t i = 0; i < opts_.shards; ++i)
    shards_.push_back(std::make_unique<RawTable>(table_opts("shard-" + std::to_string(i))));
  for (std::size_t i = 0; i < 3; ++i) aggs_[i] = std::make_unique<AggTable>(table_opts(kAggDirs[i]));
  cache_.set_capacity(opts_.cache_rows);
  flusher_ = std::thread([this] { flusher_loop(); });
}

Store::~Store() {
  {
    std::lock_guard lock(flush_mu_);
    stopping_ = true;
  }
  flush_cv_.notify_all();
  flusher_.join();
}

void Store::flusher_loop() {
  std::unique_lock lock(flush_mu_);
  while (true) {
    flush_cv_.wait(lock, [&] { return stopping_ || !flush_jobs_.empty(); });
    if (flush_jobs_.empty()) return;
    auto job = std::move(flush_jobs_.front());
    flush_jobs_.pop_front();
    lock.unlock();
    try {
      job();
    } catch (const std::exception& e) {
      std::cerr << "rtdap: background flush failed: " << e.what() << "\n";
    }
    lock.lock();
  }
}

void Store::schedule_flush(std::function<void()> job) {
  {
    std::lock_guard lock(flush_mu_);
    if (flush_jobs_.size() > 8) return;
    flush_jobs_.push_back(std::move(job));
  }
  flush_cv_.notify_one();
}

void Store::delay() const {
  if (opts_.op_latency.count() > 0) std::this_thread::sleep_for(opts_.op_latency);
}

Store::AggTable& Store::agg_table(Resolution r) const { return *aggs_[resolution_index(r)]; }

std::uint32_t Store::shard_of(TagId tag) const noexcept {
  const auto idx = (tag.value == 0 ? 0 : tag.value - 1) / opts_.tags_per_shard;
  return std::min<std::uint32_t>(idx, shard_count() - 1);
}

void Store::check_tag(TagId tag) const {
  if (!dict_.contains(tag)) throw Error(Errc::UnknownTag, "tag id " + std::to_string(tag.value));
}

TagId Store::register_tag(const TagName& name) { return dict_.register_tag(name); }

void Store::put_batch(std::span<const Sample> records) {
  delay();
  for (const auto& r : records) {
    if (!dict_.contains(r.tag)) throw Error(Errc::UnregisteredTag, "tag id " + std::to_string(r.tag.value));
  }
  std::vector<std::map<RowKey, RawRow>> per_shard(shards_.size());
  for (const auto& r : records) {
    const RowKey key{r.tag, bucket_of(r.time, Resolution::Hour)};
    per_shard[shard_of(r.tag)][key].cells.insert_or_assign(static_cast<std::uint32_t>(r.time - key.bucket),
                                                           RawCell{r.value, r.status});
  }
  for (std::size_t i = 0; i < per_shard.size(); ++i) {
    if (per_shard[i].empty()) continue;
    RawTable::Delta delta(per_shard[i].begin(), per_shard[i].end());
    const bool needs_flush = shards_[i]->write(delta);
    if (cache_.capacity() > 0) {
      std::vector<RowKey> keys;
      keys.reserve(delta.size());
      for (const auto& [k, _] : delta) keys.push_back(k);
      cache_.invalidate(keys);
    }
    if (needs_flush) schedule_flush([t = shards_[i].get()] { t->flush(); });
  }
  records_written_ += records.size();
  ++put_batches_;
}

std::vector<Sample> Store::scan_raw(TagId tag, Timestamp from, Timestamp to, ScanStats* stats) {
  check_tag(tag);
  if (from > to) throw Error(Errc::BadRange, "from > to");
  std::vector<Sample> out;
  if (from == to) return out;

  auto& table = *shards_[shard_of(tag)];
  ScanStats local;
  auto emit = [&](Timestamp bucket, const RawRow& row) {
    const auto lo = from > bucket ? static_cast<std::uint32_t>(from - bucket) : 0u;
    for (auto it = row.cells.lower_bound(lo); it != row.cells.end(); ++it) {
      const Timestamp ts = bucket + it->first;
      if (ts >= to) break;
      out.push_back({tag, ts, it->second.value, it->second.status});
    }
  };
  const Timestamp first = bucket_of(from, Resolution::Hour);
  const Timestamp buckets = (to - 1 - first) / kHour + 1;
  if (buckets > kProbeLimit) {
    // Very wide windows: one range pass over the table instead of a probe
    // per bucket. Only rows that exist are read, and counted.
    ReadCounters counters;
    const Timestamp last = bucket_of(to - 1, Resolution::Hour);
    const RowKey hi = last > ~Timestamp{0} - kHour ? RowKey{TagId{tag.value + 1}, 0} : RowKey{tag, last + kHour};
    for (const auto& [key, row] : table.range({tag, first}, hi, &counters)) {
      ++local.rows;
      emit(key.bucket, row);
    }
    local.segment_rows = counters.segment_rows;
  } else {
    for (Timestamp bucket = first; bucket < to; bucket += kHour) {
      const RowKey key{tag, bucket};
      ++local.rows;
      RowCache::RowPtr row;
      if (auto hit = cache_.lookup(key)) {
        ++local.cache_hits;
        row = std::move(*hit);
      } else {
        const auto epoch = cache_.epoch();
        ReadCounters counters;
        auto fetched = table.get(key, &counters);
        local.segment_rows += counters.segment_rows;
        if (fetched) row = std::make_shared<const RawRow>(std::move(*fetched));
        cache_.insert(key, row, epoch);
      }
      if (row) emit(bucket, *row);
    }
  }
  rows_read_ += local.rows;
  segment_rows_read_ += local.segment_rows;
  if (stats) {
    stats->rows += local.rows;
    stats->segment_rows += local.segment_rows;
    stats->cache_hits += local.cache_hits;
  }
  return out;
}

std::vector<AggCell> Store::read_agg(TagId tag, Resolution res, Timestamp from, Timestamp to) const {
  check_tag(tag);
  if (from > to) throw Error(Errc::BadRange, "from > to");
  std::vector<AggCell> out;
  const RowKey lo{tag, bucket_of(from, res)};
  const RowKey hi{tag, bucket_of(to, res)};
  if (!(lo < hi)) return out;
  for (auto& [key, cell] : agg_table(res).range(lo, hi)) out.push_back(cell);
  return out;
}

std::optional<AggCell> Store::get_agg(TagId tag, Resolution res, Timestamp bucket_start) const {
  delay();
  ++agg_reads_;
  return agg_table(res).get({tag, bucket_start});
}

void Store::upsert_agg(const AggCell& cell) {
  if (cell.count == 0 || !(cell.min <= cell.max) || cell.bucket % width(cell.resolution) != 0 ||
      cell.close_time < cell.bucket || cell.close_time >= cell.bucket + width(cell.resolution))
    throw Error(Errc::InvalidConfig, "invalid aggregate cell");
  delay();
  ++agg_writes_;
  auto& table = agg_table(cell.resolution);
  if (table.write({{RowKey{cell.tag, cell.bucket}, cell}})) schedule_flush([t = &table] { t->flush(); });
}

std::size_t Store::rebuild_aggregates(TagId first, TagId last, Timestamp from, Timestamp to) {
  if (from > to) throw Error(Errc::BadRange, "from > to");
  if (from == to) return 0;
  const Timestamp day_from = bucket_of(from, Resolution::Day);
  const Timestamp day_to = bucket_of(to - 1, Resolution::Day) + width(Resolution::Day);
  const std::uint32_t hi = std::min<std::uint32_t>(last.value, static_cast<std::uint32_t>(dict_.size()));

  std::size_t written = 0;
  for (std::uint32_t id = std::max<std::uint32_t>(first.value, 1); id <= hi; ++id) {
    const TagId tag{id};
    std::lock_guard lock(agg_lock(tag));
    auto raw = scan_raw(tag, day_from, day_to);
    std::vector<std::pair<Timestamp, double>> points;
    for (const auto& s : raw) {
      if (const auto* v = std::get_if<double>(&s.value)) points.emplace_back(s.time, *v);
    }
    for (auto res : kAllResolutions) {
      // Batch fold over each bucket's run of points (scan output is time-ordered).
      std::size_t i = 0;
      while (i < points.size()) {
        const Timestamp bucket = bucket_of(points[i].first, res);
        std::size_t j = i;
        while (j < points.size() && bucket_of(points[j].first, res) == bucket) ++j;
        AggCell cell;
        cell.tag = tag;
        cell.resolution = res;
        cell.bucket = bucket;
        auto [mn, mx] = std::minmax_element(points.begin() + i, points.begin() + j,
                                            [](const auto& a, const auto& b) { return a.second < b.second; });
        cell.min = mn->second;
        cell.max = mx->second;
        cell.close = points[j - 1].second;
        cell.close_time = points[j - 1].first;
        cell.count = j - i;
        if (auto existing = agg_table(res).get({tag, bucket})) cell.applied_offset = existing->applied_offset;
        agg_table(res).write({{RowKey{tag, bucket}, cell}});
        ++written;
        i = j;
      }
    }
  }
  return written;
}

StoreStats Store::stats() const {
  StoreStats s;
  s.tags = dict_.size();
  s.records_written = records_written_;
  s.put_batches = put_batches_;
  s.rows_read = rows_read_;
  s.segment_rows_read = segment_rows_read_;
  s.agg_reads = agg_reads_;
  s.agg_writes = agg_writes_;
  s.cache = cache_.stats();
  return s;
}

void Store::flush() {
  for (auto& s : shards_) s->flush();
  for (auto& a : aggs_) a->flush();
}

void Store::compact() {
  for (auto& s : shards_) s->compact();
  for (auto& a : aggs_) a->compact();
}

}  // namespace rtdap::tsdb
