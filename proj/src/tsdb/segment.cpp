#include "rtdap/tsdb/segment.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>

#include "rtdap/core/bytes.hpp"
#include "rtdap/core/error.hpp"
#include "rtdap/core/record_file.hpp"

namespace rtdap::tsdb {
namespace {

constexpr std::string_view kMagic = "RTSEG001";

}  // namespace

Segment::~Segment() {
  if (fd_ >= 0) ::close(fd_);
}

std::shared_ptr<Segment> Segment::create(const std::filesystem::path& path, const Rows& rows) {
  std::string data(kMagic);
  bytes::put_be64(data, rows.size());
  std::shared_ptr<Segment> seg(new Segment());
  seg->index_.reserve(rows.size());
  for (const auto& [key, bytes] : rows) {
    auto k = encode_key(key);
    data.append(reinterpret_cast<const char*>(k.data()), k.size());
    bytes::put_be32(data, static_cast<std::uint32_t>(bytes.size()));
    seg->index_.push_back({key, data.size(), static_cast<std::uint32_t>(bytes.size())});
    data.append(bytes);
  }
  if (path.empty()) {
    seg->memory_ = std::move(data);
    return seg;
  }
  write_file_atomic(path, data);
  seg->path_ = path;
  seg->fd_ = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
  if (seg->fd_ < 0) throw Error(Errc::IoError, "open " + path.string() + ": " + std::strerror(errno));
  return seg;
}

std::shared_ptr<Segment> Segment::open(const std::filesystem::path& path) {
  std::string data = read_file(path);
  if (data.compare(0, kMagic.size(), kMagic) != 0) throw Error(Errc::CorruptData, "bad segment magic in " + path.string());
  bytes::Reader in(std::string_view(data).substr(kMagic.size()));
  const auto count = in.be64();
  std::shared_ptr<Segment> seg(new Segment());
  seg->index_.reserve(count);
  std::uint64_t pos = kMagic.size() + 8;
  for (std::uint64_t i = 0; i < count; ++i) {
    auto key = decode_rowkey(in.take(kRowKeySize));
    auto len = in.be32();
    pos += kRowKeySize + 4;
    in.take(len);
    seg->index_.push_back({key, pos, len});
    pos += len;
  }
  seg->path_ = path;
  seg->fd_ = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
  if (seg->fd_ < 0) throw Error(Errc::IoError, "open " + path.string() + ": " + std::strerror(errno));
  return seg;
}

std::string Segment::read_at(const Entry& e) const {
  if (fd_ < 0) return memory_.substr(e.offset, e.length);
  std::string out(e.length, '\0');
  std::size_t done = 0;
  while (done < e.length) {
    ssize_t n = ::pread(fd_, out.data() + done, e.length - done, static_cast<off_t>(e.offset + done));
    if (n <= 0) {
      if (n < 0 && errno == EINTR) continue;
      throw Error(Errc::IoError, "pread " + path_.string());
    }
    done += static_cast<std::size_t>(n);
  }
  return out;
}

std::optional<std::string> Segment::get(const RowKey& key) const {
  auto it = std::lower_bound(index_.begin(), index_.end(), key, [](const Entry& e, const RowKey& k) { return e.key < k; });
  if (it == index_.end() || it->key != key) return std::nullopt;
  return read_at(*it);
}

void Segment::scan(const RowKey& from, const RowKey& to,
                   const std::function<void(const RowKey&, std::string_view)>& visit) const {
  auto it = std::lower_bound(index_.begin(), index_.end(), from, [](const Entry& e, const RowKey& k) { return e.key < k; });
  for (; it != index_.end() && it->key < to; ++it) {
    auto bytes = read_at(*it);
    visit(it->key, bytes);
  }
}

}  // namespace rtdap::tsdb
