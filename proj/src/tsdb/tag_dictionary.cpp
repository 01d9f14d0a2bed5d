#include "rtdap/tsdb/tag_dictionary.hpp"

#include "rtdap/core/bytes.hpp"
#include "rtdap/core/error.hpp"

namespace rtdap::tsdb {

TagDictionary::TagDictionary(const std::filesystem::path& file) {
  if (file.empty()) return;
  file_ = RecordFile::open(file, [&](std::string_view payload) {
    bytes::Reader in(payload);
    const auto id = in.be32();
    auto name = TagName::parse(in.take(in.remaining()));
    if (id != by_id_.size() + 1) throw Error(Errc::CorruptData, "tag dictionary ids are not dense");
    by_name_.emplace(name.str(), TagId{id});
    by_id_.push_back(std::move(name));
  });
}

TagId TagDictionary::register_tag(const TagName& name) {
  auto text = name.str();
  {
    std::shared_lock lock(mu_);
    if (auto it = by_name_.find(text); it != by_name_.end()) return it->second;
  }
  std::unique_lock lock(mu_);
  if (auto it = by_name_.find(text); it != by_name_.end()) return it->second;
  const TagId id{static_cast<std::uint32_t>(by_id_.size() + 1)};
  if (file_.is_open()) {
    std::string payload;
    bytes::put_be32(payload, id.value);
    payload += text;
    file_.append(payload);
  }
  by_name_.emplace(std::move(text), id);
  by_id_.push_back(name);
  return id;
}

std::optional<TagId> TagDictionary::find(const TagName& name) const {
  std::shared_lock lock(mu_);
  if (auto it = by_name_.find(name.str()); it != by_name_.end()) return it->second;
  return std::nullopt;
}

std::optional<TagName> TagDictionary::name_of(TagId id) const {
  std::shared_lock lock(mu_);
  if (!id.valid() || id.value > by_id_.size()) return std::nullopt;
  return by_id_[id.value - 1];
}

bool TagDictionary::contains(TagId id) const {
  std::shared_lock lock(mu_);
  return id.valid() && id.value <= by_id_.size();
}

std::size_t TagDictionary::size() const {
  std::shared_lock lock(mu_);
  return by_id_.size();
}

std::vector<std::pair<std::string, TagId>> TagDictionary::list(const std::string& prefix, const std::string& after,
                                                               std::size_t limit) const {
  std::shared_lock lock(mu_);
  std::vector<std::pair<std::string, TagId>> out;
  auto it = by_name_.lower_bound(prefix);
  if (!after.empty() && after >= prefix) it = by_name_.upper_bound(after);
  for (; it != by_name_.end(); ++it) {
    if (it->first.compare(0, prefix.size(), prefix) != 0) break;
    out.emplace_back(it->first, it->second);
    if (limit && out.size() == limit) break;
  }
  return out;
}

}  // namespace rtdap::tsdb
