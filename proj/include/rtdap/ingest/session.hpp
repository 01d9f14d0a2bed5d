#pragma once

#include <atomic>
#include <cstdint>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rtdap/core/tag.hpp"
#include "rtdap/core/value.hpp"
#include "rtdap/wire/frame.hpp"
#include "rtdap/wire/protocol.hpp"

namespace rtdap::tsdb {
class Store;
}
namespace rtdap::log {
class MessageLog;
}

namespace rtdap::ingest {

/// Server-wide totals, shared by every session.
struct IngestCounters {
  std::atomic<std::uint64_t> accepted{0};
  std::atomic<std::uint64_t> rejected{0};
  std::atomic<std::uint64_t> frames{0};
  std::atomic<std::uint64_t> bytes_in{0};
  std::atomic<std::uint64_t> connections_total{0};
  std::atomic<std::int64_t> active_connections{0};
  std::atomic<std::uint64_t> protocol_errors{0};
};

struct Binding {
  TagId tag;
  ValueKind kind;
};

/// One connection's protocol state: stream-id bindings and counters.
/// Not thread-safe; a connection is served by one thread at a time.
class Session {
 public:
  Session(std::uint64_t conn_id, tsdb::Store& store, log::MessageLog& log, IngestCounters& counters,
          std::size_t max_frame = wire::kMaxFrameBody);
  ~Session();

  /// Registers the tag and binds the id. Re-sending the same definition is
  /// a no-op. Throws Error(MalformedTag | StreamIdConflict).
  void on_stream_definition(const wire::StreamDefinition& d);

  /// Appends the record to the log. An Int value is widened for a Float
  /// stream. Throws Error(UnboundStream | WrongValueKind).
  void on_data_record(const wire::DataRecord& r);

  /// Feeds raw connection bytes and handles every complete frame. Request
  /// errors are counted as rejections; framing errors throw (the caller
  /// drops the connection). Records are appended in one batch per call.
  void feed(std::string_view bytes);

  std::uint64_t id() const noexcept { return id_; }
  std::uint64_t accepted() const noexcept { return accepted_; }
  std::uint64_t rejected() const noexcept { return rejected_; }
  const std::unordered_map<std::uint32_t, Binding>& bindings() const noexcept { return bindings_; }

 private:
  Sample translate(const wire::DataRecord& r) const;
  void handle_body(std::string_view body);
  void reject();
  void flush();

  std::uint64_t id_;
  tsdb::Store& store_;
  log::MessageLog& log_;
  IngestCounters& counters_;
  wire::FrameReader reader_;
  std::unordered_map<std::uint32_t, Binding> bindings_;
  std::vector<Sample> pending_;
  std::uint64_t accepted_ = 0;
  std::uint64_t rejected_ = 0;
};

}  // namespace rtdap::ingest
