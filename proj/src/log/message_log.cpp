#include "rtdap/log/message_log.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "rtdap/core/codec.hpp"
#include "rtdap/core/error.hpp"

namespace rtdap::log {
namespace fs = std::filesystem;

MessageLog::MessageLog(LogOptions opts) : opts_(std::move(opts)) {
  if (opts_.partitions < 1 || opts_.partitions > 256)
    throw Error(Errc::InvalidConfig, "partitions must be in 1..256");
  if (opts_.durability == Durability::File) {
    if (opts_.dir.empty()) throw Error(Errc::InvalidConfig, "file durability needs a directory");
    std::error_code ec;
    fs::create_directories(opts_.dir / "groups", ec);
    if (ec) throw Error(Errc::IoError, "create " + opts_.dir.string() + ": " + ec.message());
  }

  partitions_.reserve(opts_.partitions);
  for (std::uint32_t i = 0; i < opts_.partitions; ++i) {
    auto p = std::make_unique<Partition>();
    if (opts_.durability == Durability::File) {
      auto path = opts_.dir / ("partition-" + std::to_string(i) + ".log");
      p->file = RecordFile::open(path, [&](std::string_view payload) {
        bytes::Reader in(payload);
        p->records.push_back({decode_sample(in), p->records.size()});
      });
    }
    partitions_.push_back(std::move(p));
  }

  if (opts_.durability == Durability::File) {
    for (const auto& entry : fs::directory_iterator(opts_.dir / "groups")) {
      if (entry.path().extension() != ".offsets") continue;
      std::vector<std::uint64_t> offsets(partitions_.size(), 0);
      std::istringstream in(read_file(entry.path()));
      std::uint32_t p = 0;
      std::uint64_t off = 0;
      while (in >> p >> off) {
        if (p < partitions_.size()) offsets[p] = std::min<std::uint64_t>(off, partitions_[p]->records.size());
      }
      groups_[entry.path().stem().string()] = std::move(offsets);
    }
  }
}

MessageLog::~MessageLog() = default;

const MessageLog::Partition& MessageLog::partition(std::uint32_t p) const {
  if (p >= partitions_.size()) throw Error(Errc::InvalidConfig, "no partition " + std::to_string(p));
  return *partitions_[p];
}

void MessageLog::append_locked(Partition& p, const Sample& s, std::string* framed) {
  if (framed) {
    std::string payload;
    encode_sample(payload, s);
    RecordFile::frame_into(*framed, payload);
  }
  p.records.push_back({s, p.records.size()});
}

AppendResult MessageLog::append(const Sample& s) {
  const auto idx = partition_of(s.tag);
  auto& p = *partitions_[idx];
  std::uint64_t offset;
  {
    std::lock_guard lock(p.mu);
    std::string framed;
    const bool file = opts_.durability == Durability::File;
    append_locked(p, s, file ? &framed : nullptr);
    if (file) {
      try {
        p.file.append_many(framed);
        if (opts_.fsync) p.file.sync();
      } catch (...) {
        p.records.pop_back();
        throw;
      }
    }
    offset = p.records.size() - 1;
  }
  p.cv.notify_all();
  return {idx, offset};
}

void MessageLog::append_batch(std::span<const Sample> samples) {
  std::vector<std::vector<const Sample*>> by_partition(partitions_.size());
  for (const auto& s : samples) by_partition[partition_of(s.tag)].push_back(&s);
  const bool file = opts_.durability == Durability::File;
  for (std::size_t i = 0; i < by_partition.size(); ++i) {
    if (by_partition[i].empty()) continue;
    auto& p = *partitions_[i];
    {
      std::lock_guard lock(p.mu);
      std::string framed;
      const auto before = p.records.size();
      for (const auto* s : by_partition[i]) append_locked(p, *s, file ? &framed : nullptr);
      if (file) {
        try {
          p.file.append_many(framed);
          if (opts_.fsync) p.file.sync();
        } catch (...) {
          p.records.resize(before);
          throw;
        }
      }
    }
    p.cv.notify_all();
  }
}

std::uint64_t MessageLog::head(std::uint32_t p) const {
  const auto& part = partition(p);
  std::lock_guard lock(part.mu);
  return part.records.size();
}

std::uint64_t MessageLog::total_records() const {
  std::uint64_t n = 0;
  for (std::uint32_t p = 0; p < partition_count(); ++p) n += head(p);
  return n;
}

void MessageLog::register_group(const std::string& group) {
  std::lock_guard lock(groups_mu_);
  auto [it, inserted] = groups_.try_emplace(group, partitions_.size(), 0);
  if (inserted && opts_.durability == Durability::File) persist_group_locked(group, it->second);
}

bool MessageLog::has_group(const std::string& group) const {
  std::lock_guard lock(groups_mu_);
  return groups_.contains(group);
}

std::vector<LogRecord> MessageLog::read(std::uint32_t p, std::uint64_t from, std::size_t max_records) const {
  const auto& part = partition(p);
  std::lock_guard lock(part.mu);
  std::vector<LogRecord> out;
  if (from >= part.records.size() || max_records == 0) return out;
  const auto end = std::min<std::uint64_t>(part.records.size(), from + max_records);
  out.assign(part.records.begin() + static_cast<std::ptrdiff_t>(from),
             part.records.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

std::vector<LogRecord> MessageLog::poll(const std::string& group, std::uint32_t p, std::size_t max_records) const {
  return read(p, committed(group, p), max_records);
}

void MessageLog::commit(const std::string& group, std::uint32_t p, std::uint64_t up_to) {
  if (up_to > head(p))
    throw Error(Errc::OffsetBeyondHead, std::to_string(up_to) + " > head of partition " + std::to_string(p));
  std::lock_guard lock(groups_mu_);
  auto it = groups_.find(group);
  if (it == groups_.end()) throw Error(Errc::UnknownGroup, group);
  if (up_to <= it->second[p]) return;
  it->second[p] = up_to;
  if (opts_.durability == Durability::File) persist_group_locked(group, it->second);
}

void MessageLog::persist_group_locked(const std::string& group, const std::vector<std::uint64_t>& offsets) {
  std::string text;
  for (std::size_t i = 0; i < offsets.size(); ++i) text += std::to_string(i) + " " + std::to_string(offsets[i]) + "\n";
  write_file_atomic(opts_.dir / "groups" / (group + ".offsets"), text);
}

std::uint64_t MessageLog::committed(const std::string& group, std::uint32_t p) const {
  partition(p);
  std::lock_guard lock(groups_mu_);
  auto it = groups_.find(group);
  if (it == groups_.end()) throw Error(Errc::UnknownGroup, group);
  return it->second[p];
}

std::uint64_t MessageLog::lag(const std::string& group, std::uint32_t p) const {
  const auto c = committed(group, p);
  return head(p) - c;
}

std::uint64_t MessageLog::total_lag(const std::string& group) const {
  std::uint64_t n = 0;
  for (std::uint32_t p = 0; p < partition_count(); ++p) n += lag(group, p);
  return n;
}

bool MessageLog::wait_for(std::uint32_t p, std::uint64_t offset, std::chrono::milliseconds timeout) const {
  const auto& part = partition(p);
  std::unique_lock lock(part.mu);
  return part.cv.wait_for(lock, timeout, [&] { return part.records.size() > offset; });
}

}  // namespace rtdap::log
