#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace rtdap {

/// Hierarchical plant-resource name rendered as `zone::seg1/seg2/.../segN`.
///
/// The zone identifies the plant area, the first segment the top-level
/// resource (usually a gateway), then device sub-paths, and the last segment
/// names the measured value or `Health`. Between one and four segments.
class TagName {
 public:
  static constexpr std::size_t kMaxSegments = 4;

  TagName(std::string zone, std::vector<std::string> path);

  /// Throws Error(MalformedTag).
  static TagName parse(std::string_view text);

  const std::string& zone() const noexcept { return zone_; }
  const std::vector<std::string>& path() const noexcept { return path_; }
  std::string str() const;

  friend bool operator==(const TagName&, const TagName&) = default;
  friend auto operator<=>(const TagName& a, const TagName& b) { return a.str() <=> b.str(); }

 private:
  std::string zone_;
  std::vector<std::string> path_;
};

inline TagName parse_tag(std::string_view text) { return TagName::parse(text); }
inline std::string format_tag(const TagName& t) { return t.str(); }

/// Dense integer alias of a TagName. Zero is reserved as invalid.
struct TagId {
  std::uint32_t value = 0;

  constexpr bool valid() const noexcept { return value != 0; }
  friend constexpr auto operator<=>(TagId, TagId) = default;
};

}  // namespace rtdap

template <>
struct std::hash<rtdap::TagId> {
  std::size_t operator()(rtdap::TagId id) const noexcept { return std::hash<std::uint32_t>{}(id.value); }
};
