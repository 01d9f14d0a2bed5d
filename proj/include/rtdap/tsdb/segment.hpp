#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rtdap/core/rowkey.hpp"

namespace rtdap::tsdb {

/// Immutable sorted run of (12-byte key, encoded row) pairs.
///
/// File layout: "RTSEG001" ‖ BE64(count) ‖ count × (key ‖ BE32(len) ‖ bytes).
/// The key index is rebuilt in memory on open; row bytes are read on demand.
/// A segment without a path lives entirely in memory.
class Segment {
 public:
  using Rows = std::vector<std::pair<RowKey, std::string>>;

  /// `rows` must be sorted by key. Written via temp file + rename.
  static std::shared_ptr<Segment> create(const std::filesystem::path& path, const Rows& rows);
  static std::shared_ptr<Segment> open(const std::filesystem::path& path);

  ~Segment();
  Segment(const Segment&) = delete;
  Segment& operator=(const Segment&) = delete;

  std::optional<std::string> get(const RowKey& key) const;
  /// Visits rows with from <= key < to in key order.
  void scan(const RowKey& from, const RowKey& to,
            const std::function<void(const RowKey&, std::string_view)>& visit) const;

  std::size_t size() const noexcept { return index_.size(); }
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  struct Entry {
    RowKey key;
    std::uint64_t offset;
    std::uint32_t length;
  };
  Segment() = default;
  std::string read_at(const Entry& e) const;

  std::filesystem::path path_;
  int fd_ = -1;
  std::string memory_;
  std::vector<Entry> index_;
};

}  // namespace rtdap::tsdb
