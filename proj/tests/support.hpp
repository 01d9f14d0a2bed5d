#pragma once

#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "rtdap/core/tag.hpp"
#include "rtdap/core/value.hpp"
#include "rtdap/tsdb/cells.hpp"

namespace rtdap::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& stem = "rtdap") {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / (stem + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& sub) const { return path_ / sub; }

 private:
  std::filesystem::path path_;
};

inline std::string random_segment(std::mt19937_64& rng) {
  static const std::string alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_.";
  std::uniform_int_distribution<std::size_t> len(1, 12), pick(0, alphabet.size() - 1);
  std::string s(len(rng), ' ');
  for (auto& c : s) c = alphabet[pick(rng)];
  return s;
}

inline TagName random_tag(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> depth(1, 4);
  std::vector<std::string> path(depth(rng));
  for (auto& p : path) p = random_segment(rng);
  return TagName(random_segment(rng), std::move(path));
}

using FoldKey = std::tuple<std::uint32_t, Resolution, Timestamp>;

/// Brute-force aggregate oracle: per (tag, resolution, bucket) fold of
/// float samples given in arrival order. min/max over all values, close =
/// value with greatest timestamp (later arrival wins ties), count = n.
inline std::map<FoldKey, tsdb::AggCell> fold_oracle(const std::vector<Sample>& samples) {
  std::map<FoldKey, std::vector<const Sample*>> groups;
  for (const auto& s : samples) {
    if (!std::holds_alternative<double>(s.value)) continue;
    for (auto r : kAllResolutions) {
      const Timestamp b = (s.time / width(r)) * width(r);
      groups[{s.tag.value, r, b}].push_back(&s);
    }
  }
  std::map<FoldKey, tsdb::AggCell> out;
  for (const auto& [key, members] : groups) {
    tsdb::AggCell c;
    c.tag = TagId{std::get<0>(key)};
    c.resolution = std::get<1>(key);
    c.bucket = std::get<2>(key);
    c.min = std::get<double>(members.front()->value);
    c.max = c.min;
    const Sample* last = members.front();
    for (const auto* m : members) {
      const double v = std::get<double>(m->value);
      if (v < c.min) c.min = v;
      if (v > c.max) c.max = v;
      if (m->time >= last->time) last = m;
    }
    c.close = std::get<double>(last->value);
    c.close_time = last->time;
    c.count = members.size();
    out.emplace(key, c);
  }
  return out;
}

}  // namespace rtdap::testing
