#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <string>

#include "rtdap/core/tag.hpp"
#include "rtdap/core/time.hpp"
#include "rtdap/core/value.hpp"

namespace rtdap {

inline constexpr std::size_t kRowKeySize = 12;
inline constexpr std::size_t kQualifierSize = 6;

using EncodedRowKey = std::array<std::uint8_t, kRowKeySize>;

/// Storage coordinate of one row: a tag and the start of its time bucket.
/// The raw table always uses hour buckets; aggregate tables reuse the layout
/// with minute/hour/day aligned bucket starts.
struct RowKey {
  TagId tag;
  Timestamp bucket = 0;

  friend constexpr auto operator<=>(const RowKey&, const RowKey&) = default;
};

/// BE32(tagId) ‖ BE64(bucket_of(ts, HOUR)).
EncodedRowKey encode_rowkey(TagId tag, Timestamp ts);
/// Encodes the key verbatim, without re-aligning the bucket.
EncodedRowKey encode_key(const RowKey& key);
/// Throws Error(BadKeyLength) unless exactly 12 bytes.
RowKey decode_rowkey(std::span<const std::uint8_t> bytes);
RowKey decode_rowkey(std::string_view bytes);

/// Cell coordinate within one hour row.
struct ColumnQualifier {
  ValueKind kind = ValueKind::Float;
  Status status = 0;
  std::uint32_t offset_millis = 0;
};

/// BE32(offsetMillis) ‖ kind ‖ status. Offset leads so that byte order within
/// a row is timestamp order.
std::array<std::uint8_t, kQualifierSize> encode_qualifier(const ColumnQualifier& q);
ColumnQualifier decode_qualifier(std::span<const std::uint8_t> bytes);

}  // namespace rtdap
