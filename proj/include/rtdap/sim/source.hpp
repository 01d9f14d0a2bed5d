#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "rtdap/core/tag.hpp"
#include "rtdap/net/socket.hpp"
#include "rtdap/wire/protocol.hpp"

namespace rtdap::sim {

enum class Waveform { Sine, Ramp, RandomWalk, Constant };

struct SourceTag {
  TagName name;
  Waveform waveform = Waveform::Sine;
  double amplitude = 1.0;
  /// Seconds; for sine and ramp.
  double period = 60.0;
  double baseline = 0.0;
};

struct SourceConfig {
  std::vector<SourceTag> tags;
  double rate_per_tag = 1.0;  // records/s
  double duration = 10.0;     // s
  std::uint64_t seed = 1;
  /// Logical clock: timestamps are start + i/rate, independent of when the
  /// record is sent. Otherwise the send time is used.
  bool logical_clock = true;
  /// First logical timestamp; 0 means the wall clock at start.
  Timestamp start = 0;
  /// Pace sends to the configured rate; off sends as fast as possible.
  bool realtime = true;
  wire::Encoding encoding = wire::Encoding::None;

  std::uint64_t steps() const noexcept;
  /// Throws Error(InvalidConfig).
  void validate() const;
};

SourceConfig source_from_json(const nlohmann::json& j);
nlohmann::json source_to_json(const SourceConfig& c);

/// Value of a tag at `seconds` after the start; `walk` carries the random
/// walk state.
double waveform_value(const SourceTag& t, double seconds, double walk);

/// The stream definitions (id = index + 1) a source sends first.
std::vector<wire::StreamDefinition> definitions(const SourceConfig& cfg);

/// Every record of a logical-clock run, in send order (step-major, tag-minor).
/// Deterministic given the config.
std::vector<wire::DataRecord> generate(const SourceConfig& cfg, Timestamp start);

struct SourceReport {
  std::uint64_t defined = 0;
  std::uint64_t sent = 0;
  double seconds = 0;
  /// Set when the connection dropped; `sent` is the partial count.
  std::string error;
};

SourceReport run_source(const SourceConfig& cfg, const net::Endpoint& target);

}  // namespace rtdap::sim
