#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include "rtdap/core/bytes.hpp"
#include "rtdap/core/error.hpp"
#include "rtdap/core/record_file.hpp"
#include "rtdap/tsdb/segment.hpp"

namespace rtdap::tsdb {

struct TableOptions {
  std::filesystem::path dir;  // empty: memory only, no WAL
  bool wal = true;
  std::size_t memtable_bytes = 4u << 20;
  std::size_t max_segments = 8;
};

struct ReadCounters {
  std::uint64_t segment_rows = 0;
};

/// Memtable plus immutable sorted segments, with a write-ahead log.
///
/// Traits supplies the row type and how a newer partial row merges onto an
/// older one:
///
///   using Value = ...;
///   static void merge(Value& older, const Value& newer);
///   static void encode(std::string& out, const Value& v);
///   static Value decode(const RowKey& key, std::string_view bytes);
///   static std::size_t approx_size(const Value& v);
///
/// Merging must be idempotent: replaying a WAL whose contents already reached
/// a segment yields the same rows.
template <class Traits>
class SortedTable {
 public:
  using Value = typename Traits::Value;
  using Map = std::map<RowKey, Value>;
  using Delta = std::vector<std::pair<RowKey, Value>>;

  explicit SortedTable(TableOptions opts) : opts_(std::move(opts)) {
    if (opts_.dir.empty()) {
      opts_.wal = false;
      return;
    }
    std::error_code ec;
    std::filesystem::create_directories(opts_.dir, ec);
    if (ec) throw Error(Errc::IoError, "create " + opts_.dir.string() + ": " + ec.message());
    recover();
  }

  SortedTable(const SortedTable&) = delete;
  SortedTable& operator=(const SortedTable&) = delete;

  /// Applies the delta (WAL first, then memtable). Returns true when the
  /// memtable has outgrown its budget and a flush should be scheduled.
  bool write(const Delta& delta) {
    std::unique_lock lock(mu_);
    if (opts_.wal) {
      std::string payload;
      for (const auto& [key, value] : delta) append_entry(payload, key, value);
      wal_.append(payload);
    }
    for (const auto& [key, value] : delta) merge_into(mem_, key, value);
    return mem_bytes_ >= opts_.memtable_bytes && !flushing_.load();
  }

  std::optional<Value> get(const RowKey& key, ReadCounters* counters = nullptr) const {
    std::shared_lock lock(mu_);
    std::optional<Value> out;
    for (const auto& seg : segments_) {
      if (auto bytes = seg->get(key)) {
        if (counters) ++counters->segment_rows;
        merge_opt(out, Traits::decode(key, *bytes));
      }
    }
    if (imm_) {
      if (auto it = imm_->find(key); it != imm_->end()) merge_opt(out, it->second);
    }
    if (auto it = mem_.find(key); it != mem_.end()) merge_opt(out, it->second);
    return out;
  }

  /// Rows with from <= key < to, merged across all sources.
  Map range(const RowKey& from, const RowKey& to, ReadCounters* counters = nullptr) const {
    std::shared_lock lock(mu_);
    Map out;
    for (const auto& seg : segments_) {
      seg->scan(from, to, [&](const RowKey& k, std::string_view bytes) {
        if (counters) ++counters->segment_rows;
        merge_into_plain(out, k, Traits::decode(k, bytes));
      });
    }
    auto overlay = [&](const Map& m) {
      for (auto it = m.lower_bound(from); it != m.end() && it->first < to; ++it) merge_into_plain(out, it->first, it->second);
    };
    if (imm_) overlay(*imm_);
    overlay(mem_);
    return out;
  }

  /// Moves the memtable into a new segment. Safe to call concurrently with
  /// reads and writes; flushes serialize among themselves.
  void flush() {
    std::lock_guard flush_lock(flush_mu_);
    flushing_ = true;
    std::shared_ptr<const Map> imm;
    std::uint64_t old_wal = 0;
    {
      std::unique_lock lock(mu_);
      if (mem_.empty()) {
        flushing_ = false;
        return;
      }
      imm = std::make_shared<const Map>(std::move(mem_));
      mem_ = Map{};
      mem_bytes_ = 0;
      imm_ = imm;
      if (opts_.wal) {
        old_wal = wal_seq_;
        wal_ = RecordFile::open(wal_path(++wal_seq_));
      }
    }

    Segment::Rows rows;
    rows.reserve(imm->size());
    for (const auto& [key, value] : *imm) {
      std::string bytes;
      Traits::encode(bytes, value);
      rows.emplace_back(key, std::move(bytes));
    }
    auto seg = Segment::create(opts_.dir.empty() ? std::filesystem::path{} : segment_path(next_segment_++), rows);
    {
      std::unique_lock lock(mu_);
      segments_.push_back(std::move(seg));
      imm_.reset();
    }
    if (opts_.wal) std::filesystem::remove(wal_path(old_wal));
    flushing_ = false;
    if (segment_count() > opts_.max_segments) compact_locked();
  }

  /// Merges all segments into one.
  void compact() {
    std::lock_guard flush_lock(flush_mu_);
    compact_locked();
  }

  std::size_t segment_count() const {
    std::shared_lock lock(mu_);
    return segments_.size();
  }

  std::size_t memtable_bytes() const {
    std::shared_lock lock(mu_);
    return mem_bytes_;
  }

 private:
  static void merge_opt(std::optional<Value>& out, const Value& newer) {
    if (out)
      Traits::merge(*out, newer);
    else
      out = newer;
  }

  static void merge_into_plain(Map& m, const RowKey& key, const Value& v) {
    auto [it, inserted] = m.try_emplace(key, v);
    if (!inserted) Traits::merge(it->second, v);
  }

  void merge_into(Map& m, const RowKey& key, const Value& v) {
    auto [it, inserted] = m.try_emplace(key, v);
    if (inserted) {
      mem_bytes_ += Traits::approx_size(v) + 48;
    } else {
      const auto before = Traits::approx_size(it->second);
      Traits::merge(it->second, v);
      mem_bytes_ += Traits::approx_size(it->second) - std::min(before, Traits::approx_size(it->second));
    }
  }

  static void append_entry(std::string& out, const RowKey& key, const Value& value) {
    auto k = encode_key(key);
    out.append(reinterpret_cast<const char*>(k.data()), k.size());
    std::string bytes;
    Traits::encode(bytes, value);
    bytes::put_be32(out, static_cast<std::uint32_t>(bytes.size()));
    out.append(bytes);
  }

  void replay(std::string_view payload) {
    bytes::Reader in(payload);
    while (!in.done()) {
      auto key = decode_rowkey(in.take(kRowKeySize));
      auto len = in.be32();
      merge_into(mem_, key, Traits::decode(key, in.take(len)));
    }
  }

  std::filesystem::path wal_path(std::uint64_t seq) const { return opts_.dir / ("wal-" + std::to_string(seq) + ".log"); }
  std::filesystem::path segment_path(std::uint64_t id) const {
    return opts_.dir / ("segment-" + std::to_string(id) + ".sst");
  }

  static std::optional<std::uint64_t> numbered(const std::filesystem::path& p, std::string_view prefix,
                                               std::string_view ext) {
    auto name = p.filename().string();
    if (name.size() <= prefix.size() + ext.size() || name.compare(0, prefix.size(), prefix) != 0 ||
        name.compare(name.size() - ext.size(), ext.size(), ext) != 0)
      return std::nullopt;
    std::uint64_t n = 0;
    auto first = name.data() + prefix.size();
    auto last = name.data() + name.size() - ext.size();
    auto [ptr, ec] = std::from_chars(first, last, n);
    if (ec != std::errc() || ptr != last) return std::nullopt;
    return n;
  }

  void recover() {
    std::vector<std::uint64_t> seg_ids, wal_ids;
    for (const auto& entry : std::filesystem::directory_iterator(opts_.dir)) {
      if (auto id = numbered(entry.path(), "segment-", ".sst")) seg_ids.push_back(*id);
      if (auto id = numbered(entry.path(), "wal-", ".log")) wal_ids.push_back(*id);
      if (entry.path().extension() == ".tmp") std::filesystem::remove(entry.path());
    }
    std::sort(seg_ids.begin(), seg_ids.end());
    std::sort(wal_ids.begin(), wal_ids.end());
    for (auto id : seg_ids) segments_.push_back(Segment::open(segment_path(id)));
    next_segment_ = seg_ids.empty() ? 1 : seg_ids.back() + 1;

    for (auto id : wal_ids) {
      auto f = RecordFile::open(wal_path(id), [&](std::string_view payload) { replay(payload); });
    }
    wal_seq_ = wal_ids.empty() ? 1 : wal_ids.back() + 1;
    if (!opts_.wal) {
      for (auto id : wal_ids) std::filesystem::remove(wal_path(id));
      return;
    }
    // Checkpoint the replayed state into a fresh WAL before dropping the old
    // ones, so recovery never depends on more than one generation.
    wal_ = RecordFile::open(wal_path(wal_seq_));
    if (!mem_.empty()) {
      std::string payload;
      for (const auto& [key, value] : mem_) append_entry(payload, key, value);
      wal_.append(payload);
    }
    for (auto id : wal_ids) std::filesystem::remove(wal_path(id));
  }

  void compact_locked() {
    std::vector<std::shared_ptr<Segment>> snapshot;
    {
      std::shared_lock lock(mu_);
      snapshot = segments_;
    }
    if (snapshot.size() < 2) return;
    Map merged;
    const RowKey lo{TagId{0}, 0};
    const RowKey hi{TagId{0xffffffffu}, ~Timestamp{0}};
    for (const auto& seg : snapshot) {
      seg->scan(lo, hi, [&](const RowKey& k, std::string_view bytes) { merge_into_plain(merged, k, Traits::decode(k, bytes)); });
    }
    Segment::Rows rows;
    rows.reserve(merged.size());
    for (const auto& [key, value] : merged) {
      std::string bytes;
      Traits::encode(bytes, value);
      rows.emplace_back(key, std::move(bytes));
    }
    auto seg = Segment::create(opts_.dir.empty() ? std::filesystem::path{} : segment_path(next_segment_++), rows);
    {
      std::unique_lock lock(mu_);
      segments_.erase(segments_.begin(), segments_.begin() + static_cast<std::ptrdiff_t>(snapshot.size()));
      segments_.insert(segments_.begin(), std::move(seg));
    }
    for (const auto& old : snapshot) {
      if (!old->path().empty()) std::filesystem::remove(old->path());
    }
  }

  TableOptions opts_;
  mutable std::shared_mutex mu_;
  std::mutex flush_mu_;
  std::atomic<bool> flushing_{false};
  Map mem_;
  std::size_t mem_bytes_ = 0;
  std::shared_ptr<const Map> imm_;
  std::vector<std::shared_ptr<Segment>> segments_;
  RecordFile wal_;
  std::uint64_t wal_seq_ = 1;
  std::uint64_t next_segment_ = 1;
};

}  // namespace rtdap::tsdb
