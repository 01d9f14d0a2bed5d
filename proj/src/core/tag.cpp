#include "rtdap/core/tag.hpp"

#include "rtdap/core/error.hpp"

namespace rtdap {
namespace {

constexpr std::string_view kZoneSep = "::";

void check_part(std::string_view part, std::string_view what) {
  if (part.empty()) throw Error(Errc::MalformedTag, "empty " + std::string(what));
  if (part.find('/') != std::string_view::npos || part.find(kZoneSep) != std::string_view::npos)
    throw Error(Errc::MalformedTag, std::string(what) + " contains a separator: " + std::string(part));
}

}  // namespace

TagName::TagName(std::string zone, std::vector<std::string> path) : zone_(std::move(zone)), path_(std::move(path)) {
  check_part(zone_, "zone");
  // A trailing ':' on the zone or a leading ':' on the first segment would
  // make the rendered `::` ambiguous on re-parse.
  if (zone_.back() == ':') throw Error(Errc::MalformedTag, "zone ends with ':'");
  if (path_.empty() || path_.size() > kMaxSegments)
    throw Error(Errc::MalformedTag, "path must have 1.." + std::to_string(kMaxSegments) + " segments");
  for (const auto& seg : path_) check_part(seg, "segment");
  if (path_.front().front() == ':') throw Error(Errc::MalformedTag, "first segment starts with ':'");
}

TagName TagName::parse(std::string_view text) {
  const auto sep = text.find(kZoneSep);
  if (sep == std::string_view::npos) throw Error(Errc::MalformedTag, "missing '::' in " + std::string(text));
  std::string zone(text.substr(0, sep));
  std::string_view rest = text.substr(sep + kZoneSep.size());

  std::vector<std::string> path;
  while (true) {
    const auto slash = rest.find('/');
    path.emplace_back(rest.substr(0, slash));
    if (slash == std::string_view::npos) break;
    if (path.size() > kMaxSegments) break;
    rest.remove_prefix(slash + 1);
  }
  return TagName(std::move(zone), std::move(path));
}

std::string TagName::str() const {
  std::string out = zone_;
  out += kZoneSep;
  for (std::size_t i = 0; i < path_.size(); ++i) {
    if (i) out += '/';
    out += path_[i];
  }
  return out;
}

}  // namespace rtdap
