#include "rtdap/wire/frame.hpp"

#include <zlib.h>

#include "rtdap/core/bytes.hpp"
#include "rtdap/core/error.hpp"

namespace rtdap::wire {

std::string deflate_bytes(std::string_view raw, int level) {
  uLongf cap = compressBound(static_cast<uLong>(raw.size()));
  std::string out(cap, '\0');
  int rc = compress2(reinterpret_cast<Bytef*>(out.data()), &cap, reinterpret_cast<const Bytef*>(raw.data()),
                     static_cast<uLong>(raw.size()), level);
  if (rc != Z_OK) throw Error(Errc::CorruptDeflate, "compress2 failed");
  out.resize(cap);
  return out;
}

std::string inflate_bytes(std::string_view compressed, std::size_t max_out) {
  z_stream zs{};
  if (inflateInit(&zs) != Z_OK) throw Error(Errc::CorruptDeflate, "inflateInit failed");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(compressed.data()));
  zs.avail_in = static_cast<uInt>(compressed.size());

  std::string out;
  char chunk[16384];
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = reinterpret_cast<Bytef*>(chunk);
    zs.avail_out = sizeof(chunk);
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw Error(Errc::CorruptDeflate, zs.msg ? zs.msg : "inflate failed");
    }
    out.append(chunk, sizeof(chunk) - zs.avail_out);
    if (out.size() > max_out) {
      inflateEnd(&zs);
      throw Error(Errc::BodyTooLarge, "inflated body exceeds limit");
    }
    if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
      inflateEnd(&zs);
      throw Error(Errc::CorruptDeflate, "deflate stream ends early");
    }
  }
  bool trailing = zs.avail_in != 0;
  inflateEnd(&zs);
  if (trailing) throw Error(Errc::CorruptDeflate, "trailing bytes after deflate stream");
  return out;
}

std::string write_frame(std::string_view body, Encoding enc, std::size_t max_body) {
  if (body.size() > max_body) throw Error(Errc::BodyTooLarge, std::to_string(body.size()) + " bytes");
  std::string payload;
  std::string_view send = body;
  if (enc == Encoding::Deflate) {
    payload = deflate_bytes(body);
    if (payload.size() > max_body) throw Error(Errc::BodyTooLarge, "compressed payload too large");
    send = payload;
  }
  std::string out;
  out.reserve(kFrameHeaderSize + send.size());
  out.push_back(static_cast<char>(enc));
  bytes::put_be32(out, static_cast<std::uint32_t>(send.size()));
  out.append(send);
  return out;
}

std::string read_frame(std::string_view in, std::size_t& consumed, std::size_t max_body) {
  if (in.empty()) throw Error(Errc::Truncated, "no frame header");
  const auto flag = static_cast<std::uint8_t>(in[0]);
  if (flag != 0x00 && flag != 0x01) throw Error(Errc::BadFlag, "flag " + std::to_string(flag));
  if (in.size() < kFrameHeaderSize) throw Error(Errc::Truncated, "partial frame header");
  const std::uint32_t len = bytes::get_be32(in.data() + 1);
  if (len > max_body) throw Error(Errc::BodyTooLarge, std::to_string(len) + " bytes");
  if (in.size() < kFrameHeaderSize + len) throw Error(Errc::Truncated, "partial frame body");

  std::string_view payload = in.substr(kFrameHeaderSize, len);
  consumed = kFrameHeaderSize + len;
  if (flag == 0x01) return inflate_bytes(payload, max_body);
  return std::string(payload);
}

std::optional<std::string> FrameReader::next() {
  std::string_view pending(buffer_.data() + pos_, buffer_.size() - pos_);
  if (pending.empty()) return std::nullopt;
  // Validate the header eagerly so a bad flag is reported before the rest of
  // a bogus frame arrives.
  if (pending.size() < kFrameHeaderSize) {
    const auto flag = static_cast<std::uint8_t>(pending[0]);
    if (flag > 0x01) throw Error(Errc::BadFlag, "flag " + std::to_string(flag));
    return std::nullopt;
  }
  const std::uint32_t len = bytes::get_be32(pending.data() + 1);
  if (pending.size() < kFrameHeaderSize + len && len <= max_body_ && static_cast<std::uint8_t>(pending[0]) <= 0x01)
    return std::nullopt;

  std::size_t used = 0;
  std::string body = read_frame(pending, used, max_body_);
  pos_ += used;
  if (pos_ == buffer_.size()) {
    buffer_.clear();
    pos_ = 0;
  } else if (pos_ > (1u << 16) && pos_ * 2 > buffer_.size()) {
    buffer_.erase(0, pos_);
    pos_ = 0;
  }
  return body;
}

}  // namespace rtdap::wire
