#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "rtdap/core/tag.hpp"
#include "rtdap/core/time.hpp"

namespace rtdap {

enum class ValueKind : char { Float = 'F', Int = 'I', Bool = 'B', Str = 'S' };

inline constexpr std::size_t kMaxStringValue = 256;

/// Alternative index order matches ValueKind order F, I, B, S.
using Value = std::variant<double, std::int64_t, bool, std::string>;

/// Opaque status byte, stored and returned verbatim.
using Status = std::uint8_t;

ValueKind kind_of(const Value& v) noexcept;
std::optional<ValueKind> kind_from_char(char c) noexcept;
inline char to_char(ValueKind k) noexcept { return static_cast<char>(k); }

/// One measurement addressed by tag id.
struct Sample {
  TagId tag;
  Timestamp time = 0;
  Value value;
  Status status = 0;

  friend bool operator==(const Sample&, const Sample&) = default;
};

}  // namespace rtdap
