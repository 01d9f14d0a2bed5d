#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include "rtdap/core/record_file.hpp"
#include "rtdap/core/tag.hpp"

namespace rtdap::tsdb {

/// Two-way TagName <-> TagId dictionary. Ids are dense from 1 and never
/// reused. Persisted as `tags.dict` (records of BE32 id ‖ name).
class TagDictionary {
 public:
  /// Empty path keeps the dictionary in memory.
  explicit TagDictionary(const std::filesystem::path& file = {});

  /// Idempotent; returns the existing id when already registered.
  TagId register_tag(const TagName& name);
  std::optional<TagId> find(const TagName& name) const;
  std::optional<TagName> name_of(TagId id) const;
  bool contains(TagId id) const;
  std::size_t size() const;

  /// (name, id) pairs matching the prefix, ordered by rendered name, starting
  /// strictly after `after` when given. limit 0 means all.
  std::vector<std::pair<std::string, TagId>> list(const std::string& prefix = {}, const std::string& after = {},
                                                  std::size_t limit = 0) const;

 private:
  mutable std::shared_mutex mu_;
  std::map<std::string, TagId> by_name_;
  std::vector<TagName> by_id_;  // index id-1
  RecordFile file_;
};

}  // namespace rtdap::tsdb
