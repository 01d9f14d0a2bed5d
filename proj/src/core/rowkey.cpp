#include "rtdap/core/rowkey.hpp"

#include "rtdap/core/bytes.hpp"
#include "rtdap/core/error.hpp"

namespace rtdap {

namespace bytes {

void Reader::need(std::size_t n) const {
  if (remaining() < n) throw Error(Errc::CorruptData, "unexpected end of buffer");
}

std::uint8_t Reader::u8() {
  need(1);
  return static_cast<std::uint8_t>(data_[pos_++]);
}

std::uint16_t Reader::be16() {
  need(2);
  auto v = get_be16(data_.data() + pos_);
  pos_ += 2;
  return v;
}

std::uint32_t Reader::be32() {
  need(4);
  auto v = get_be32(data_.data() + pos_);
  pos_ += 4;
  return v;
}

std::uint64_t Reader::be64() {
  need(8);
  auto v = get_be64(data_.data() + pos_);
  pos_ += 8;
  return v;
}

std::string_view Reader::take(std::size_t n) {
  need(n);
  auto v = data_.substr(pos_, n);
  pos_ += n;
  return v;
}

}  // namespace bytes

EncodedRowKey encode_key(const RowKey& key) {
  EncodedRowKey out{};
  for (int i = 0; i < 4; ++i) out[i] = static_cast<std::uint8_t>(key.tag.value >> (24 - 8 * i));
  for (int i = 0; i < 8; ++i) out[4 + i] = static_cast<std::uint8_t>(key.bucket >> (56 - 8 * i));
  return out;
}

EncodedRowKey encode_rowkey(TagId tag, Timestamp ts) { return encode_key({tag, bucket_of(ts, Resolution::Hour)}); }

RowKey decode_rowkey(std::span<const std::uint8_t> b) {
  if (b.size() != kRowKeySize)
    throw Error(Errc::BadKeyLength, "expected 12 bytes, got " + std::to_string(b.size()));
  RowKey key;
  for (int i = 0; i < 4; ++i) key.tag.value = (key.tag.value << 8) | b[i];
  for (int i = 0; i < 8; ++i) key.bucket = (key.bucket << 8) | b[4 + i];
  return key;
}

RowKey decode_rowkey(std::string_view bytes) {
  return decode_rowkey(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
}

std::array<std::uint8_t, kQualifierSize> encode_qualifier(const ColumnQualifier& q) {
  return {static_cast<std::uint8_t>(q.offset_millis >> 24), static_cast<std::uint8_t>(q.offset_millis >> 16),
          static_cast<std::uint8_t>(q.offset_millis >> 8),  static_cast<std::uint8_t>(q.offset_millis),
          static_cast<std::uint8_t>(q.kind),                q.status};
}

ColumnQualifier decode_qualifier(std::span<const std::uint8_t> b) {
  if (b.size() != kQualifierSize) throw Error(Errc::BadKeyLength, "qualifier must be 6 bytes");
  auto kind = kind_from_char(static_cast<char>(b[4]));
  if (!kind) throw Error(Errc::CorruptData, "bad value kind in qualifier");
  ColumnQualifier q;
  q.offset_millis = (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
  q.kind = *kind;
  q.status = b[5];
  if (q.offset_millis >= width(Resolution::Hour)) throw Error(Errc::CorruptData, "qualifier offset out of hour");
  return q;
}

}  // namespace rtdap
