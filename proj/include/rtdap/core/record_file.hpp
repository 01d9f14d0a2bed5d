#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

namespace rtdap {

/// Append-only file of checksummed records: BE32(len) ‖ payload ‖ BE32(crc32).
///
/// Used by message-log partitions, write-ahead logs and the tag dictionary.
/// Writes go straight to the kernel (write(2)), so they survive a killed
/// process; `sync` additionally fsyncs.
class RecordFile {
 public:
  RecordFile() = default;
  RecordFile(RecordFile&& o) noexcept;
  RecordFile& operator=(RecordFile&& o) noexcept;
  RecordFile(const RecordFile&) = delete;
  RecordFile& operator=(const RecordFile&) = delete;
  ~RecordFile();

  /// Replays every intact record through `visit`, truncates a torn or
  /// corrupt tail, then opens the file for appending. Throws Error(IoError).
  static RecordFile open(const std::filesystem::path& path,
                         const std::function<void(std::string_view payload)>& visit = {});

  void append(std::string_view payload);
  /// Several records in one write(2).
  void append_many(const std::string& framed);
  static void frame_into(std::string& out, std::string_view payload);
  void sync();
  void close() noexcept;
  bool is_open() const noexcept { return fd_ >= 0; }
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  int fd_ = -1;
  std::filesystem::path path_;
};

/// Writes `data` to `path` via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view data);
std::string read_file(const std::filesystem::path& path);

}  // namespace rtdap
