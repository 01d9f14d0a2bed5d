#include "rtdap/core/value.hpp"

#include "rtdap/core/time.hpp"

namespace rtdap {

ValueKind kind_of(const Value& v) noexcept {
  constexpr ValueKind kinds[] = {ValueKind::Float, ValueKind::Int, ValueKind::Bool, ValueKind::Str};
  return kinds[v.index()];
}

std::optional<ValueKind> kind_from_char(char c) noexcept {
  switch (c) {
    case 'F': return ValueKind::Float;
    case 'I': return ValueKind::Int;
    case 'B': return ValueKind::Bool;
    case 'S': return ValueKind::Str;
    default: return std::nullopt;
  }
}

std::string_view to_string(Resolution r) noexcept {
  switch (r) {
    case Resolution::Minute: return "min";
    case Resolution::Hour: return "hour";
    case Resolution::Day: return "day";
  }
  return "?";
}

std::optional<Resolution> resolution_from_string(std::string_view s) noexcept {
  if (s == "min" || s == "minute") return Resolution::Minute;
  if (s == "hour") return Resolution::Hour;
  if (s == "day") return Resolution::Day;
  return std::nullopt;
}

}  // namespace rtdap
