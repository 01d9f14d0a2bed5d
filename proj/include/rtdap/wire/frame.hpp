#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "rtdap/wire/protocol.hpp"

namespace rtdap::wire {

inline constexpr std::size_t kFrameHeaderSize = 5;
inline constexpr std::size_t kMaxFrameBody = 1u << 20;

/// flag ‖ BE32(len) ‖ payload. Throws Error(BodyTooLarge) when either the
/// body or the encoded payload exceeds max_body.
std::string write_frame(std::string_view body, Encoding enc, std::size_t max_body = kMaxFrameBody);

/// Decodes the first frame of `bytes`. On success returns the body and sets
/// `consumed` to the frame length. Throws Error(Truncated) when the input
/// holds only part of a frame, and BadFlag / BodyTooLarge / CorruptDeflate
/// on malformed input.
std::string read_frame(std::string_view bytes, std::size_t& consumed, std::size_t max_body = kMaxFrameBody);

std::string deflate_bytes(std::string_view raw, int level = 6);
/// Throws CorruptDeflate, or BodyTooLarge when the output would exceed max_out.
std::string inflate_bytes(std::string_view compressed, std::size_t max_out);

/// Incremental reader holding one connection's partial input.
class FrameReader {
 public:
  explicit FrameReader(std::size_t max_body = kMaxFrameBody) : max_body_(max_body) {}

  void feed(std::string_view bytes) { buffer_.append(bytes); }

  /// Next complete frame body, or nullopt while the buffered bytes are a
  /// strict prefix of a frame. Malformed frames throw; the reader is then
  /// unusable for that connection.
  std::optional<std::string> next();

  std::size_t buffered() const noexcept { return buffer_.size() - pos_; }

 private:
  std::string buffer_;
  std::size_t pos_ = 0;
  std::size_t max_body_;
};

}  // namespace rtdap::wire
