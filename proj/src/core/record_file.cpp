#include "rtdap/core/record_file.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>
#include <zlib.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "rtdap/core/bytes.hpp"
#include "rtdap/core/error.hpp"

namespace rtdap {
namespace {

[[noreturn]] void io_fail(const std::filesystem::path& p, const char* op) {
  throw Error(Errc::IoError, std::string(op) + " " + p.string() + ": " + std::strerror(errno));
}

void write_fully(int fd, std::string_view data, const std::filesystem::path& p) {
  while (!data.empty()) {
    ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      io_fail(p, "write");
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

std::uint32_t crc_of(std::string_view payload) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(payload.data()), static_cast<uInt>(payload.size())));
}

}  // namespace

RecordFile::RecordFile(RecordFile&& o) noexcept : fd_(o.fd_), path_(std::move(o.path_)) { o.fd_ = -1; }

RecordFile& RecordFile::operator=(RecordFile&& o) noexcept {
  if (this != &o) {
    close();
    fd_ = o.fd_;
    path_ = std::move(o.path_);
    o.fd_ = -1;
  }
  return *this;
}

RecordFile::~RecordFile() { close(); }

void RecordFile::close() noexcept {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

RecordFile RecordFile::open(const std::filesystem::path& path,
                            const std::function<void(std::string_view)>& visit) {
  std::string data;
  if (std::filesystem::exists(path)) data = read_file(path);

  std::size_t pos = 0;
  while (data.size() - pos >= 8) {
    const std::uint32_t len = bytes::get_be32(data.data() + pos);
    if (data.size() - pos - 8 < len) break;
    std::string_view payload(data.data() + pos + 4, len);
    if (bytes::get_be32(data.data() + pos + 4 + len) != crc_of(payload)) break;
    if (visit) visit(payload);
    pos += 8 + len;
  }

  RecordFile f;
  f.path_ = path;
  f.fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_CLOEXEC, 0644);
  if (f.fd_ < 0) io_fail(path, "open");
  if (pos != data.size() && ::ftruncate(f.fd_, static_cast<off_t>(pos)) != 0) io_fail(path, "truncate");
  if (::lseek(f.fd_, 0, SEEK_END) < 0) io_fail(path, "seek");
  return f;
}

void RecordFile::frame_into(std::string& out, std::string_view payload) {
  bytes::put_be32(out, static_cast<std::uint32_t>(payload.size()));
  out.append(payload);
  bytes::put_be32(out, crc_of(payload));
}

void RecordFile::append(std::string_view payload) {
  std::string framed;
  framed.reserve(payload.size() + 8);
  frame_into(framed, payload);
  write_fully(fd_, framed, path_);
}

void RecordFile::append_many(const std::string& framed) { write_fully(fd_, framed, path_); }

void RecordFile::sync() {
  if (fd_ >= 0 && ::fsync(fd_) != 0) io_fail(path_, "fsync");
}

void write_file_atomic(const std::filesystem::path& path, std::string_view data) {
  auto tmp = path;
  tmp += ".tmp";
  int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) io_fail(tmp, "open");
  write_fully(fd, data, tmp);
  ::close(fd);
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(Errc::IoError, "rename " + tmp.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

}  // namespace rtdap
