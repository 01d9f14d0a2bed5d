#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

namespace rtdap {

/// UTC milliseconds since the Unix epoch.
using Timestamp = std::uint64_t;

enum class Resolution : std::uint64_t {
  Minute = 60'000,
  Hour = 3'600'000,
  Day = 86'400'000,
};

inline constexpr Resolution kAllResolutions[] = {Resolution::Minute, Resolution::Hour, Resolution::Day};

constexpr std::uint64_t width(Resolution r) noexcept { return static_cast<std::uint64_t>(r); }

/// Largest multiple of the resolution width not greater than ts.
constexpr Timestamp bucket_of(Timestamp ts, Resolution r) noexcept { return ts - ts % width(r); }

std::string_view to_string(Resolution r) noexcept;
std::optional<Resolution> resolution_from_string(std::string_view s) noexcept;

/// Current system time.
Timestamp wall_clock_ms() noexcept;

}  // namespace rtdap
