#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

#include "rtdap/core/time.hpp"
#include "rtdap/core/value.hpp"

namespace rtdap::wire {

enum class Encoding : std::uint8_t { None = 0x00, Deflate = 0x01 };

std::string_view to_string(Encoding e) noexcept;

/// `{"type":"D","parameter":{"id","tag","type"[,"enc"]}}`
struct StreamDefinition {
  std::uint32_t id = 0;
  std::string tag;
  ValueKind kind = ValueKind::Float;
  Encoding encoding = Encoding::None;

  friend bool operator==(const StreamDefinition&, const StreamDefinition&) = default;
};

/// `{"type":"d","parameter":{"id","time","value","status"}}`
struct DataRecord {
  std::uint32_t id = 0;
  Timestamp time = 0;
  Value value;
  Status status = 0;

  friend bool operator==(const DataRecord&, const DataRecord&) = default;
};

using Request = std::variant<StreamDefinition, DataRecord>;

std::string encode_request(const Request& r);

/// The kind of `DataRecord::value` follows the JSON token type: float for
/// numbers with a fraction or exponent, Int for integers, Bool, Str. The
/// receiver widens Int to Float when the stream was declared F.
///
/// Throws Error(BadJson | UnknownType | MissingField | WrongValueKind).
Request decode_request(std::string_view json);

}  // namespace rtdap::wire
