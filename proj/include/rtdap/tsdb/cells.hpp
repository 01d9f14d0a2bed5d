#pragma once

#include <cstdint>
#include <limits>
#include <map>

#include "rtdap/core/rowkey.hpp"
#include "rtdap/core/time.hpp"
#include "rtdap/core/value.hpp"

namespace rtdap::tsdb {

struct RawCell {
  Value value;
  Status status = 0;

  friend bool operator==(const RawCell&, const RawCell&) = default;
};

/// One hour bucket of one tag: cells keyed by millisecond offset into the hour.
struct RawRow {
  std::map<std::uint32_t, RawCell> cells;

  friend bool operator==(const RawRow&, const RawRow&) = default;
};

inline constexpr std::uint64_t kNoOffset = std::numeric_limits<std::uint64_t>::max();

/// Min/max/close rollup of one tag over one minute, hour or day bucket.
struct AggCell {
  TagId tag;
  Resolution resolution = Resolution::Minute;
  Timestamp bucket = 0;
  double min = 0;
  double max = 0;
  double close = 0;
  Timestamp close_time = 0;
  std::uint64_t count = 0;
  /// Highest message-log offset folded into this cell, or kNoOffset. Lets a
  /// redelivered batch skip records the cell already contains. Not part of
  /// the cell's value (ignored by ==).
  std::uint64_t applied_offset = kNoOffset;

  friend bool operator==(const AggCell& a, const AggCell& b) {
    return a.tag == b.tag && a.resolution == b.resolution && a.bucket == b.bucket && a.min == b.min &&
           a.max == b.max && a.close == b.close && a.close_time == b.close_time && a.count == b.count;
  }
};

}  // namespace rtdap::tsdb
